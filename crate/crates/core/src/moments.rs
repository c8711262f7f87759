//! Exact mixed moments of randomly weighted averages.
//!
//! [`rwa_moment_expansion`] expands `E[∏_j Z_j^{s_j}]` multinomially: for each
//! column `j` the exponent `s_j` is split over the `n` summands as a composition
//! `h_{·j}`, and each term factors into a multinomial coefficient, a weight moment
//! `E[∏_i W_i^{h_i*}]` with `h_i* = Σ_j h_ij`, and per-summand Dirichlet moments
//! `E[∏_j X_ij^{h_ij}]`. [`rwa_moment_closed_form`] is the target Dirichlet's moment.
//! The two must agree; the sum over compositions collapses through the
//! normalization of the Dirichlet-multinomial law (see [`dirmult_normalization_check`]).

use std::ops::Deref;

use crate::distributions::{dirichlet_mixed_moment, DirichletParams};
use crate::error::{Error, Result};
use crate::rwa::{target_params, weight_params, RwaSpec, WeightedAverageModel};
use crate::special::{ln_gamma_ratio, multinomial, CompensatedSum};

/// Default cap on the total order `Σ s_j` accepted by the expansion.
pub const DEFAULT_ORDER_CAP: u32 = 8;

/// Largest trial count [`dirmult_normalization_check`] will enumerate.
pub const DIRMULT_ENUMERATION_CAP: u32 = 64;

/// Exponent vector `(s_1, …, s_k)` of a mixed moment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MomentIndex(Vec<u32>);

impl MomentIndex {
    pub fn new(s: Vec<u32>) -> Self {
        Self(s)
    }

    pub fn zeros(k: usize) -> Self {
        Self(vec![0; k])
    }

    /// `s` with `order` in coordinate `i` and zeros elsewhere.
    pub fn unit(k: usize, i: usize, order: u32) -> Self {
        let mut s = vec![0; k];
        s[i] = order;
        Self(s)
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    /// All indices of dimension `k` with total order in `1..=max_order`,
    /// ordered by total order, then lexicographically descending.
    pub fn enumerate(k: usize, max_order: u32) -> Vec<MomentIndex> {
        (1..=max_order)
            .flat_map(|m| compositions(m, k))
            .map(MomentIndex)
            .collect()
    }
}

impl Deref for MomentIndex {
    type Target = [u32];

    fn deref(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for MomentIndex {
    fn from(s: Vec<u32>) -> Self {
        Self(s)
    }
}

impl std::fmt::Display for MomentIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// Compositions of `total` into `parts` non-negative parts, in lexicographically
/// descending order (first part largest first).
pub fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(remaining: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for h in (0..=remaining).rev() {
            prefix.push(h);
            rec(remaining - h, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

/// Per column `j`, every composition `h_{·j}` of `s_j` into `n` parts.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionTable {
    columns: Vec<Vec<Vec<u32>>>,
}

impl CompositionTable {
    pub fn new(s: &[u32], n: usize) -> Self {
        Self {
            columns: s.iter().map(|&sj| compositions(sj, n)).collect(),
        }
    }

    pub fn columns(&self) -> &[Vec<Vec<u32>>] {
        &self.columns
    }

    /// Number of composition tuples, `∏_j |compositions(s_j)|`.
    pub fn size(&self) -> usize {
        self.columns.iter().map(Vec::len).product()
    }

    /// `∏_j C(s_j + n − 1, n − 1)`.
    pub fn expected_size(s: &[u32], n: usize) -> usize {
        s.iter()
            .map(|&sj| crate::special::binomial(sj + n as u32 - 1, n as u32 - 1) as usize)
            .product()
    }
}

/// `E[∏ W_i^{h_i}]` for the weight vector of `spec`.
pub fn weight_moment(spec: &RwaSpec, h_star: &[u32]) -> Result<f64> {
    dirichlet_mixed_moment(&weight_params(spec), h_star)
}

pub fn rwa_moment_expansion(spec: &RwaSpec, s: &MomentIndex) -> Result<f64> {
    rwa_moment_expansion_capped(spec, s, DEFAULT_ORDER_CAP)
}

pub fn rwa_moment_expansion_capped(spec: &RwaSpec, s: &MomentIndex, cap: u32) -> Result<f64> {
    model_moment_expansion(&spec.model(), s, cap)
}

/// The multinomial expansion of `E[∏_j Z_j^{s_j}]` for any weight law, not only
/// the one whose parameters are the component totals.
pub fn model_moment_expansion(model: &WeightedAverageModel, s: &MomentIndex, cap: u32) -> Result<f64> {
    ExpansionPlan::new(s, model.n(), cap)?.evaluate(model)
}

/// The parameter-free part of the expansion for one `(s, n)`: every tuple of
/// compositions `h_{·j}` and its multinomial coefficient. Reusable across models.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionPlan {
    s: MomentIndex,
    n: usize,
    /// `[j]`: compositions of `s_j`, flattened with stride `n`.
    parts: Vec<Vec<u32>>,
    /// `[j][c] = (s_j; h_{·j})`.
    multinomials: Vec<Vec<f64>>,
}

impl ExpansionPlan {
    pub fn new(s: &MomentIndex, n: usize, cap: u32) -> Result<Self> {
        let order = s.order();
        if order > cap {
            return Err(Error::OrderCapExceeded { order, cap });
        }
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one component".into()));
        }
        let table = CompositionTable::new(s, n);
        Ok(Self {
            s: s.clone(),
            n,
            parts: table.columns().iter().map(|col| col.concat()).collect(),
            multinomials: table
                .columns()
                .iter()
                .map(|col| col.iter().map(|h| multinomial(h)).collect())
                .collect(),
        })
    }

    pub fn index(&self) -> &MomentIndex {
        &self.s
    }

    /// Number of composition tuples summed by [`evaluate`](Self::evaluate).
    pub fn terms(&self) -> usize {
        self.multinomials.iter().map(Vec::len).product()
    }

    pub fn evaluate(&self, model: &WeightedAverageModel) -> Result<f64> {
        let (n, k) = (self.n, self.s.len());
        if model.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: model.n(),
            });
        }
        if model.k() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: model.k(),
            });
        }
        let order = self.s.order() as usize;
        let stride = order + 1;

        // weight[i][h] = E-factor of W_i^h times the normaliser of component i at
        // total degree h: Γ(β_i+h)/Γ(β_i) · Γ(r_i)/Γ(r_i+h), with the global
        // Γ(B)/Γ(B+Σs) pulled out.
        let weights = model.weights.alpha();
        let mut weight = vec![0.0; n * stride];
        for i in 0..n {
            let r = model.components[i].total();
            let row = &mut weight[i * stride..(i + 1) * stride];
            row[0] = 1.0;
            for h in 1..stride {
                let x = (h - 1) as f64;
                row[h] = row[h - 1] * (weights[i] + x) / (r + x);
            }
        }
        let global = 1.0 / rising_factorial(model.weights.total(), order as u32);

        // column[j][c] = multinomial · ∏_i Γ(α_ij + h_ij)/Γ(α_ij).
        let column: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                self.multinomials[j]
                    .iter()
                    .enumerate()
                    .map(|(c, &m)| {
                        let h = &self.parts[j][c * n..(c + 1) * n];
                        (0..n).fold(m, |acc, i| acc * rising_factorial(model.components[i].alpha()[j], h[i]))
                    })
                    .collect()
            })
            .collect();

        // Depth-first over one composition per column, carrying the partial
        // product and the running row totals h*_i = Σ_j h_ij.
        let ctx = Walk {
            n,
            stride,
            parts: &self.parts,
            column: &column,
            weight: &weight,
        };
        let mut h_star = vec![0usize; n];
        let mut acc = CompensatedSum::new();
        ctx.walk(0, global, &mut h_star, &mut acc);
        Ok(acc.value())
    }
}

struct Walk<'a> {
    n: usize,
    stride: usize,
    parts: &'a [Vec<u32>],
    column: &'a [Vec<f64>],
    weight: &'a [f64],
}

impl Walk<'_> {
    fn walk(&self, j: usize, partial: f64, h_star: &mut [usize], acc: &mut CompensatedSum) {
        let n = self.n;
        let last = j + 1 == self.column.len();
        for (c, &factor) in self.column[j].iter().enumerate() {
            let h = &self.parts[j][c * n..(c + 1) * n];
            if last {
                let mut term = partial * factor;
                for i in 0..n {
                    term *= self.weight[i * self.stride + h_star[i] + h[i] as usize];
                }
                acc.add(term);
            } else {
                for i in 0..n {
                    h_star[i] += h[i] as usize;
                }
                self.walk(j + 1, partial * factor, h_star, acc);
                for i in 0..n {
                    h_star[i] -= h[i] as usize;
                }
            }
        }
    }
}

/// `Γ(a + h) / Γ(a) = a (a + 1) ⋯ (a + h − 1)`.
fn rising_factorial(a: f64, h: u32) -> f64 {
    (0..h).fold(1.0, |acc, r| acc * (a + f64::from(r)))
}

/// `Γ(ΣΣα)/Γ(ΣΣα+Σs) · ∏_j Γ(c_j+s_j)/Γ(c_j)` with `c_j` the column sums.
pub fn rwa_moment_closed_form(spec: &RwaSpec, s: &MomentIndex) -> Result<f64> {
    let target = target_params(spec);
    if s.len() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: s.len(),
        });
    }
    let total = spec.total();
    let ln = target
        .alpha()
        .iter()
        .zip(s.iter())
        .fold(-ln_gamma_ratio(total, f64::from(s.order())), |acc, (&c, &sj)| {
            acc + ln_gamma_ratio(c, f64::from(sj))
        });
    Ok(ln.exp())
}

/// Dirichlet-multinomial parameters: concentrations and number of trials.
#[derive(Debug, Clone, PartialEq)]
pub struct DirMultParams {
    pub alpha: DirichletParams,
    pub trials: u32,
}

impl DirMultParams {
    pub fn new(alpha: DirichletParams, trials: u32) -> Self {
        Self { alpha, trials }
    }
}

/// `trials!/∏c_i! · Γ(A)/Γ(A+trials) · ∏ Γ(α_i+c_i)/Γ(α_i)`.
pub fn dirmult_pmf(p: &DirMultParams, counts: &[u32]) -> Result<f64> {
    if counts.len() != p.alpha.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.alpha.dim(),
            got: counts.len(),
        });
    }
    let got: u32 = counts.iter().sum();
    if got != p.trials {
        return Err(Error::CountMismatch {
            expected: p.trials,
            got,
        });
    }
    let mut ln = multinomial(counts).ln() - ln_gamma_ratio(p.alpha.total(), f64::from(p.trials));
    for (&a, &c) in p.alpha.alpha().iter().zip(counts) {
        ln += ln_gamma_ratio(a, f64::from(c));
    }
    Ok(ln.exp())
}

/// Sum of the pmf over every count vector; equals 1 up to rounding.
pub fn dirmult_normalization_check(p: &DirMultParams) -> Result<f64> {
    if p.trials > DIRMULT_ENUMERATION_CAP {
        return Err(Error::EnumerationCapExceeded {
            trials: p.trials,
            cap: DIRMULT_ENUMERATION_CAP,
        });
    }
    let mut acc = CompensatedSum::new();
    for counts in compositions(p.trials, p.alpha.dim()) {
        acc.add(dirmult_pmf(p, &counts)?);
    }
    Ok(acc.value())
}

/// Outcome of the product-MGF identity check
/// `E[(1 − t·X)^{−Σα}] = ∏_i (1 − t_i)^{−α_i}` for `X ~ Dirichlet(α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductIdentityCheck {
    /// Truncated series `Σ_{m ≤ M} (c)_m / m! · E[(t·X)^m]`.
    pub series: f64,
    /// `∏ (1 − t_i)^{−α_i}`.
    pub product: f64,
    pub truncation_order: u32,
    /// Upper bound on the omitted series tail.
    pub tail_bound: f64,
}

impl ProductIdentityCheck {
    pub fn abs_error(&self) -> f64 {
        (self.series - self.product).abs()
    }
}

/// Largest truncation order the check will use.
pub const MAX_SERIES_ORDER: u32 = 400;

/// The identity evaluated as a power series in `u = t·X` truncated at `order`.
/// Moments `E[u^m]` come from [`dirichlet_mixed_moment`].
///
/// Since `X` lies on the simplex, `|u| ≤ ρ = max|t_i|`, so the tail is bounded by
/// the tail of `Σ (c)_m/m! ρ^m = (1 − ρ)^{−c}`.
pub fn product_identity_series(alpha: &DirichletParams, t: &[f64], order: u32) -> Result<ProductIdentityCheck> {
    let k = alpha.dim();
    if t.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: t.len(),
        });
    }
    let rho = t.iter().fold(0.0f64, |m, ti| m.max(ti.abs()));
    if !(rho < 1.0) {
        return Err(Error::InvalidParameter(format!("need max |t_i| < 1, got {rho}")));
    }
    let c = alpha.total();
    let mut series = CompensatedSum::new();
    let mut majorant = CompensatedSum::new();
    for m in 0..=order {
        let coef = (ln_gamma_ratio(c, f64::from(m)) - crate::special::ln_factorial(m)).exp();
        let mut power_moment = CompensatedSum::new();
        for s in compositions(m, k) {
            let monomial: f64 = t.iter().zip(&s).map(|(ti, &si)| ti.powi(si as i32)).product();
            power_moment.add(multinomial(&s) * monomial * dirichlet_mixed_moment(alpha, &s)?);
        }
        series.add(coef * power_moment.value());
        majorant.add(coef * rho.powi(m as i32));
    }
    let tail_bound = ((1.0 - rho).powf(-c) - majorant.value()).max(0.0);
    let product = alpha.alpha().iter().zip(t).map(|(a, ti)| (1.0 - ti).powf(-a)).product();
    Ok(ProductIdentityCheck {
        series: series.value(),
        product,
        truncation_order: order,
        tail_bound,
    })
}

/// [`product_identity_series`] at the smallest order whose tail bound is below `tail_tol`.
pub fn product_identity_check(alpha: &DirichletParams, t: &[f64], tail_tol: f64) -> Result<ProductIdentityCheck> {
    let rho = t.iter().fold(0.0f64, |m, ti| m.max(ti.abs()));
    if !(rho < 1.0) {
        return Err(Error::InvalidParameter(format!("need max |t_i| < 1, got {rho}")));
    }
    let c = alpha.total();
    let full = (1.0 - rho).powf(-c);
    let mut partial = 0.0;
    for m in 0..=MAX_SERIES_ORDER {
        partial += (ln_gamma_ratio(c, f64::from(m)) - crate::special::ln_factorial(m)).exp() * rho.powi(m as i32);
        // Loose pre-screen; the exact bound is recomputed by the series itself.
        if full - partial <= 0.5 * tail_tol {
            let check = product_identity_series(alpha, t, m)?;
            if check.tail_bound <= tail_tol {
                return Ok(check);
            }
        }
    }
    Err(Error::InvalidParameter(format!(
        "series tail stays above {tail_tol:e} at order {MAX_SERIES_ORDER}"
    )))
}
