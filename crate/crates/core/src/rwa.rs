//! Randomly weighted averages `Z = Σ_j W_j X_j` of independent Dirichlet vectors.
//!
//! An [`RwaSpec`] is an `n × k` matrix whose row `j` parameterizes `X_j`. The
//! weights are Dirichlet with the row sums as parameters, and the average is then
//! Dirichlet with the column sums as parameters. Three independent samplers are
//! provided so that the claim can be cross-checked:
//!
//! * [`sample_rwa_direct`]: draw `W` and every `X_j` as Dirichlet vectors.
//! * [`sample_rwa_gamma_path`]: draw `Y_j ~ Gamma(row sum j)` and set `W_j = Y_j / ΣY`.
//! * [`sample_rwa_gamma_ratio`]: one gamma per matrix entry; `X_j`, `W` and `Z`
//!   are all ratios of sums of the same gamma matrix.

use crate::batch::SampleBatch;
use crate::distributions::{
    DirichletParams, DirichletSampler, GammaParams, GammaSampler, SimplexPoint, MAX_UNDERFLOW_RETRIES,
};
use crate::error::{Error, Result};
use crate::moments::{model_moment_expansion, MomentIndex};
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};

/// Tolerance on `z = Σ w_j x_j` for a consistent [`RwaSample`].
pub const COMBINATION_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RwaSpec {
    alphas: Vec<Vec<f64>>,
}

impl RwaSpec {
    pub fn new(alphas: Vec<Vec<f64>>) -> Result<Self> {
        let n = alphas.len();
        if n < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 rows, got {n}")));
        }
        let k = alphas[0].len();
        if k < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 columns, got {k}")));
        }
        for (j, row) in alphas.iter().enumerate() {
            if row.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: row.len(),
                });
            }
            if let Some((i, a)) = row.iter().enumerate().find(|(_, a)| !(**a > 0.0 && a.is_finite())) {
                return Err(Error::InvalidParameter(format!(
                    "alpha[{j}][{i}] = {a} is not positive"
                )));
            }
        }
        Ok(Self { alphas })
    }

    /// `n` identical rows `(a, …, a)` of length `k`.
    pub fn symmetric(n: usize, k: usize, a: f64) -> Result<Self> {
        Self::new(vec![vec![a; k]; n])
    }

    pub fn alphas(&self) -> &[Vec<f64>] {
        &self.alphas
    }

    /// Number of summands.
    pub fn n(&self) -> usize {
        self.alphas.len()
    }

    /// Dimension of each vector.
    pub fn k(&self) -> usize {
        self.alphas[0].len()
    }

    pub fn row(&self, j: usize) -> DirichletParams {
        DirichletParams::new(self.alphas[j].clone()).expect("rows validated at construction")
    }

    pub fn total(&self) -> f64 {
        self.alphas.iter().flatten().sum()
    }

    /// The weight-vector model in which these components are averaged.
    pub fn model(&self) -> WeightedAverageModel {
        WeightedAverageModel {
            weights: weight_params(self),
            components: (0..self.n()).map(|j| self.row(j)).collect(),
        }
    }
}

/// Row sums: the Dirichlet parameters of `W`.
pub fn weight_params(spec: &RwaSpec) -> DirichletParams {
    let sums = spec.alphas.iter().map(|row| row.iter().sum()).collect();
    DirichletParams::new(sums).expect("row sums of positive entries are positive")
}

/// Column sums: the Dirichlet parameters of `Z`.
pub fn target_params(spec: &RwaSpec) -> DirichletParams {
    let mut sums = vec![0.0; spec.k()];
    for row in &spec.alphas {
        for (s, a) in sums.iter_mut().zip(row) {
            *s += a;
        }
    }
    DirichletParams::new(sums).expect("column sums of positive entries are positive")
}

/// `Z = Σ W_j X_j` with Dirichlet weights of arbitrary parameters, independent of
/// the Dirichlet components.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAverageModel {
    pub weights: DirichletParams,
    pub components: Vec<DirichletParams>,
}

impl WeightedAverageModel {
    pub fn new(weights: DirichletParams, components: Vec<DirichletParams>) -> Result<Self> {
        if components.len() != weights.dim() {
            return Err(Error::DimensionMismatch {
                expected: weights.dim(),
                got: components.len(),
            });
        }
        let k = components[0].dim();
        if let Some(c) = components.iter().find(|c| c.dim() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: c.dim(),
            });
        }
        Ok(Self { weights, components })
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn k(&self) -> usize {
        self.components[0].dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RwaSample {
    pub z: SimplexPoint,
    pub w: SimplexPoint,
    pub xs: Vec<SimplexPoint>,
}

impl RwaSample {
    /// Largest deviation of `z` from `Σ_j w_j x_j`.
    pub fn combination_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.z.dim() {
            let recomputed: f64 = self
                .w
                .coords()
                .iter()
                .zip(&self.xs)
                .map(|(wj, xj)| wj * xj.coords()[i])
                .sum();
            worst = worst.max((recomputed - self.z.coords()[i]).abs());
        }
        worst
    }

    pub fn is_consistent(&self) -> bool {
        self.combination_error() <= COMBINATION_TOLERANCE
    }
}

/// Sampler for a [`WeightedAverageModel`]: `W` and each `X_j` drawn as Dirichlet vectors.
#[derive(Debug, Clone)]
pub struct DirectSampler {
    weights: DirichletSampler,
    components: Vec<DirichletSampler>,
}

impl DirectSampler {
    pub fn new(model: &WeightedAverageModel) -> Self {
        Self {
            weights: DirichletSampler::new(&model.weights),
            components: model.components.iter().map(DirichletSampler::new).collect(),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Result<RwaSample> {
        let w = self.weights.sample(rng)?;
        let xs = self
            .components
            .iter()
            .map(|c| c.sample(rng))
            .collect::<Result<Vec<_>>>()?;
        let k = xs[0].dim();
        let mut z = vec![0.0; k];
        for (wj, xj) in w.coords().iter().zip(&xs) {
            for (zi, xji) in z.iter_mut().zip(xj.coords()) {
                *zi += wj * xji;
            }
        }
        Ok(RwaSample {
            z: SimplexPoint::from_trusted(z),
            w,
            xs,
        })
    }
}

/// Weights from normalized `Gamma(row sum, 1)` variables.
#[derive(Debug, Clone)]
pub struct GammaPathSampler {
    scales: Vec<GammaSampler>,
    components: Vec<DirichletSampler>,
}

impl GammaPathSampler {
    pub fn new(spec: &RwaSpec) -> Self {
        let scales = spec
            .alphas
            .iter()
            .map(|row| GammaSampler::new(&GammaParams::new(row.iter().sum(), 1.0).expect("positive row sum")))
            .collect();
        Self {
            scales,
            components: (0..spec.n()).map(|j| DirichletSampler::new(&spec.row(j))).collect(),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Result<RwaSample> {
        let mut ys = vec![0.0; self.scales.len()];
        let mut total = 0.0;
        for _ in 0..MAX_UNDERFLOW_RETRIES {
            for (y, g) in ys.iter_mut().zip(&self.scales) {
                *y = g.sample(rng);
            }
            total = ys.iter().sum::<f64>();
            if total > 0.0 && total.is_finite() {
                break;
            }
        }
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::SamplingUnderflow {
                retries: MAX_UNDERFLOW_RETRIES,
            });
        }
        let xs = self
            .components
            .iter()
            .map(|c| c.sample(rng))
            .collect::<Result<Vec<_>>>()?;

        // Σ_j (Y_j / ΣY) X_j, accumulated as Σ_j Y_j X_j then scaled.
        let k = xs[0].dim();
        let mut t = vec![0.0; k];
        for (y, x) in ys.iter().zip(&xs) {
            for (ti, xi) in t.iter_mut().zip(x.coords()) {
                *ti += y * xi;
            }
        }
        let z: Vec<f64> = t.into_iter().map(|ti| ti / total).collect();
        let w: Vec<f64> = ys.into_iter().map(|y| y / total).collect();
        Ok(RwaSample {
            z: SimplexPoint::from_trusted(z),
            w: SimplexPoint::from_trusted(w),
            xs,
        })
    }
}

/// One `Gamma(α_ij, 1)` per matrix entry; everything else is a ratio of sums.
#[derive(Debug, Clone)]
pub struct GammaRatioSampler {
    entries: Vec<Vec<GammaSampler>>,
}

impl GammaRatioSampler {
    pub fn new(spec: &RwaSpec) -> Self {
        let entries = spec
            .alphas
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&a| GammaSampler::new(&GammaParams::new(a, 1.0).expect("positive entry")))
                    .collect()
            })
            .collect();
        Self { entries }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Result<RwaSample> {
        let n = self.entries.len();
        let k = self.entries[0].len();
        let mut g = vec![vec![0.0; k]; n];
        for _ in 0..MAX_UNDERFLOW_RETRIES {
            for (row, samplers) in g.iter_mut().zip(&self.entries) {
                for (x, s) in row.iter_mut().zip(samplers) {
                    *x = s.sample(rng);
                }
            }
            let row_totals: Vec<f64> = g.iter().map(|r| r.iter().sum()).collect();
            if row_totals.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                continue;
            }
            let grand: f64 = row_totals.iter().sum();
            let xs = g
                .iter()
                .zip(&row_totals)
                .map(|(r, t)| SimplexPoint::from_trusted(r.iter().map(|x| x / t).collect()))
                .collect();
            let w = row_totals.iter().map(|t| t / grand).collect();
            let z = (0..k).map(|i| g.iter().map(|r| r[i]).sum::<f64>() / grand).collect();
            return Ok(RwaSample {
                z: SimplexPoint::from_trusted(z),
                w: SimplexPoint::from_trusted(w),
                xs,
            });
        }
        Err(Error::SamplingUnderflow {
            retries: MAX_UNDERFLOW_RETRIES,
        })
    }
}

pub fn sample_rwa_direct(spec: &RwaSpec, rng: &mut RngStream) -> Result<RwaSample> {
    DirectSampler::new(&spec.model()).sample(rng)
}

pub fn sample_rwa_gamma_path(spec: &RwaSpec, rng: &mut RngStream) -> Result<RwaSample> {
    GammaPathSampler::new(spec).sample(rng)
}

pub fn sample_rwa_gamma_ratio(spec: &RwaSpec, rng: &mut RngStream) -> Result<RwaSample> {
    GammaRatioSampler::new(spec).sample(rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingPath {
    Direct,
    GammaPath,
    GammaRatio,
}

impl SamplingPath {
    pub const ALL: [SamplingPath; 3] = [SamplingPath::Direct, SamplingPath::GammaPath, SamplingPath::GammaRatio];

    pub fn name(&self) -> &'static str {
        match self {
            SamplingPath::Direct => "direct",
            SamplingPath::GammaPath => "gamma-path",
            SamplingPath::GammaRatio => "gamma-ratio",
        }
    }
}

/// `count` draws of `z` along `path`, each checked for `z = Σ w_j x_j`.
pub fn sample_z_batch(spec: &RwaSpec, path: SamplingPath, count: usize, rng: &mut RngStream) -> Result<SampleBatch> {
    let mut batch = SampleBatch::with_capacity(spec.k(), count, rng.seed(), rng.stream_id());
    type Draw<'a> = Box<dyn FnMut(&mut RngStream) -> Result<RwaSample> + 'a>;
    let mut draw: Draw = match path {
        SamplingPath::Direct => {
            let s = DirectSampler::new(&spec.model());
            Box::new(move |r| s.sample(r))
        }
        SamplingPath::GammaPath => {
            let s = GammaPathSampler::new(spec);
            Box::new(move |r| s.sample(r))
        }
        SamplingPath::GammaRatio => {
            let s = GammaRatioSampler::new(spec);
            Box::new(move |r| s.sample(r))
        }
    };
    for _ in 0..count {
        let sample = draw(rng)?;
        debug_assert!(sample.is_consistent());
        batch.push(sample.z.coords())?;
    }
    Ok(batch)
}

/// Reading of the two-dimensional "Dirichlet(½ + α_j)" component law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantReading {
    /// `X_j ~ Dirichlet(½ + α_j, ½ + α_j)`, target `Dirichlet(½ + Σα, ½ + Σα)`.
    Symmetric,
    /// `X_j ~ Dirichlet(½ + α_j, ½)`, target `Dirichlet(½ + Σα, ½)`.
    Asymmetric,
}

/// Weights `Dirichlet(α_1, …, α_n)` on two-dimensional components shifted by ½.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantScenario {
    pub reading: VariantReading,
    pub model: WeightedAverageModel,
    pub claimed_target: DirichletParams,
}

pub fn variant_spec(alpha: &[f64], dim: usize, reading: VariantReading) -> Result<VariantScenario> {
    if dim != 2 {
        return Err(Error::InvalidParameter(format!(
            "the variant is two-dimensional, got k = {dim}"
        )));
    }
    if alpha.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 weights, got {}",
            alpha.len()
        )));
    }
    let weights = DirichletParams::new(alpha.to_vec())?;
    let total = weights.total();
    let pair = |a: f64| match reading {
        VariantReading::Symmetric => vec![0.5 + a, 0.5 + a],
        VariantReading::Asymmetric => vec![0.5 + a, 0.5],
    };
    let components = alpha
        .iter()
        .map(|&a| DirichletParams::new(pair(a)))
        .collect::<Result<Vec<_>>>()?;
    Ok(VariantScenario {
        reading,
        model: WeightedAverageModel::new(weights, components)?,
        claimed_target: DirichletParams::new(pair(total))?,
    })
}

impl VariantScenario {
    /// Largest relative error between the exact moments of `Z` and those of the
    /// claimed target, over all orders `1..=max_order`.
    pub fn max_moment_error(&self, max_order: u32) -> Result<f64> {
        let mut worst = 0.0f64;
        for s in MomentIndex::enumerate(2, max_order) {
            let exact = model_moment_expansion(&self.model, &s, max_order)?;
            let claimed = crate::distributions::dirichlet_mixed_moment(&self.claimed_target, &s)?;
            worst = worst.max((exact - claimed).abs() / claimed);
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantResolution {
    pub symmetric_error: f64,
    pub asymmetric_error: f64,
    /// The reading whose claimed target reproduces the exact moments, if any.
    pub enabled: Option<VariantReading>,
}

/// Decides between the two readings by comparing exact mixed moments of `Z` with
/// the claimed target's, up to `max_order`.
pub fn resolve_variant_reading(alpha: &[f64], max_order: u32, rel_tol: f64) -> Result<VariantResolution> {
    let symmetric_error = variant_spec(alpha, 2, VariantReading::Symmetric)?.max_moment_error(max_order)?;
    let asymmetric_error = variant_spec(alpha, 2, VariantReading::Asymmetric)?.max_moment_error(max_order)?;
    let enabled = match (symmetric_error <= rel_tol, asymmetric_error <= rel_tol) {
        (true, false) => Some(VariantReading::Symmetric),
        (false, true) => Some(VariantReading::Asymmetric),
        _ => None,
    };
    Ok(VariantResolution {
        symmetric_error,
        asymmetric_error,
        enabled,
    })
}
