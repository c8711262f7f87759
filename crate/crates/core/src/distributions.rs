//! Gamma, Beta and Dirichlet distributions: samplers, densities and exact moments.
//!
//! Gammas use the rate parameterization (mean = shape / rate). Dirichlet draws are
//! independent unit-rate gammas divided once by their sum.

use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::special::{ln_gamma, ln_gamma_ratio};

/// Tolerance on `|Σ coords − 1|` for a valid simplex point.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Consecutive all-zero gamma vectors tolerated before giving up on a draw.
pub const MAX_UNDERFLOW_RETRIES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    shape: f64,
    rate: f64,
}

impl GammaParams {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma shape must be positive, got {shape}"
            )));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma rate must be positive, got {rate}"
            )));
        }
        Ok(Self { shape, rate })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape / (self.rate * self.rate)
    }

    fn distribution(&self) -> Gamma<f64> {
        // rand_distr: Marsaglia–Tsang squeeze for shape >= 1, shape boost below 1.
        Gamma::new(self.shape, 1.0 / self.rate).expect("validated at construction")
    }
}

/// Concentration parameters of a Dirichlet distribution on the (k−1)-simplex, k ≥ 2.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams {
    alpha: Vec<f64>,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "dirichlet needs at least 2 components, got {}",
                alpha.len()
            )));
        }
        if let Some((i, a)) = alpha.iter().enumerate().find(|(_, a)| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameter(format!("alpha[{i}] = {a} is not positive")));
        }
        Ok(Self { alpha })
    }

    /// The Beta(a, b) case.
    pub fn beta(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![a, b])
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn total(&self) -> f64 {
        self.alpha.iter().sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        let total = self.total();
        self.alpha.iter().map(|a| a / total).collect()
    }

    /// Beta parameters `(α_i, Σα − α_i)` of coordinate `i`'s marginal.
    pub fn marginal(&self, i: usize) -> (f64, f64) {
        let a = self.alpha[i];
        (a, self.total() - a)
    }
}

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("empty simplex point".into()));
        }
        if let Some((i, x)) = coords.iter().enumerate().find(|(_, x)| !(**x >= 0.0 && **x <= 1.0)) {
            return Err(Error::InvalidParameter(format!(
                "coordinate {i} = {x} is outside [0, 1]"
            )));
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "coordinates sum to {sum}, off by more than {SIMPLEX_TOLERANCE:e}"
            )));
        }
        Ok(Self { coords })
    }

    pub(crate) fn from_trusted(coords: Vec<f64>) -> Self {
        debug_assert!((coords.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOLERANCE);
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

impl AsRef<[f64]> for SimplexPoint {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

pub fn sample_gamma(p: &GammaParams, rng: &mut RngStream) -> f64 {
    p.distribution().sample(rng)
}

/// A gamma sampler with its setup constants computed once.
#[derive(Debug, Clone, Copy)]
pub struct GammaSampler {
    inner: Gamma<f64>,
}

impl GammaSampler {
    pub fn new(p: &GammaParams) -> Self {
        Self {
            inner: p.distribution(),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        self.inner.sample(rng)
    }
}

/// Prebuilt unit-rate gamma samplers for repeated Dirichlet draws.
#[derive(Debug, Clone)]
pub struct DirichletSampler {
    gammas: Vec<Gamma<f64>>,
}

impl DirichletSampler {
    pub fn new(p: &DirichletParams) -> Self {
        let gammas = p
            .alpha
            .iter()
            .map(|&a| Gamma::new(a, 1.0).expect("validated at construction"))
            .collect();
        Self { gammas }
    }

    pub fn dim(&self) -> usize {
        self.gammas.len()
    }

    pub fn sample(&self, rng: &mut RngStream) -> Result<SimplexPoint> {
        let mut draws = vec![0.0; self.gammas.len()];
        for _ in 0..MAX_UNDERFLOW_RETRIES {
            for (d, g) in draws.iter_mut().zip(&self.gammas) {
                *d = g.sample(rng);
            }
            let total: f64 = draws.iter().sum();
            if total > 0.0 && total.is_finite() {
                for d in draws.iter_mut() {
                    *d /= total;
                }
                return Ok(SimplexPoint::from_trusted(draws));
            }
        }
        Err(Error::SamplingUnderflow {
            retries: MAX_UNDERFLOW_RETRIES,
        })
    }
}

pub fn sample_dirichlet(p: &DirichletParams, rng: &mut RngStream) -> Result<SimplexPoint> {
    DirichletSampler::new(p).sample(rng)
}

/// `E[∏ X_j^{s_j}]` for `X ~ Dirichlet(p)`:
/// `Γ(Σα)/Γ(Σα+Σs) · ∏ Γ(α_j+s_j)/Γ(α_j)`, evaluated in log space.
pub fn dirichlet_mixed_moment(p: &DirichletParams, s: &[u32]) -> Result<f64> {
    if s.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: s.len(),
        });
    }
    let order: u32 = s.iter().sum();
    let mut ln = -ln_gamma_ratio(p.total(), f64::from(order));
    for (&a, &sj) in p.alpha.iter().zip(s) {
        ln += ln_gamma_ratio(a, f64::from(sj));
    }
    Ok(ln.exp())
}

pub fn dirichlet_log_pdf(p: &DirichletParams, x: &SimplexPoint) -> Result<f64> {
    if x.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: x.dim(),
        });
    }
    let mut ln = ln_gamma(p.total());
    for (i, (&a, &xi)) in p.alpha.iter().zip(x.coords()).enumerate() {
        ln -= ln_gamma(a);
        if xi == 0.0 {
            if a < 1.0 {
                return Err(Error::InfiniteDensity { coordinate: i });
            }
            if a > 1.0 {
                return Ok(f64::NEG_INFINITY);
            }
        } else {
            ln += (a - 1.0) * xi.ln();
        }
    }
    Ok(ln)
}
