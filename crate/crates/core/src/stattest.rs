//! Finite-sample comparisons of simulated batches with a target Dirichlet law,
//! and of two batches with each other.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::batch::SampleBatch;
use crate::distributions::{dirichlet_mixed_moment, DirichletParams};
use crate::error::{Error, Result};
use crate::moments::MomentIndex;
use crate::rng::RngStream;
use crate::special::{beta_cdf, CompensatedSum};

pub const DEFAULT_Z_THRESHOLD: f64 = 5.0;
pub const DEFAULT_KS_LEVEL: f64 = 0.001;
pub const DEFAULT_ENERGY_LEVEL: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentTestResult {
    pub index: Vec<u32>,
    pub empirical: f64,
    pub exact: f64,
    pub std_error: f64,
    pub z_score: f64,
    pub pass: bool,
}

/// Mean and standard error of the mean, two-pass with compensated sums.
fn mean_and_std_error(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().copied().collect::<CompensatedSum>().value() / n;
    let ss = xs
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .collect::<CompensatedSum>()
        .value();
    let var = if xs.len() > 1 { ss / (n - 1.0) } else { 0.0 };
    (mean, (var / n).sqrt())
}

/// z-test of the empirical mixed moment `mean(∏ z_j^{s_j})` against the exact
/// moment of `target`. `s = 0` passes trivially with `z = 0`.
pub fn moment_ztest(
    batch: &SampleBatch,
    target: &DirichletParams,
    s: &MomentIndex,
    threshold: f64,
) -> Result<MomentTestResult> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if batch.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: batch.dim(),
        });
    }
    if s.is_zero() {
        return Ok(MomentTestResult {
            index: s.to_vec(),
            empirical: 1.0,
            exact: 1.0,
            std_error: 0.0,
            z_score: 0.0,
            pass: true,
        });
    }
    let exact = dirichlet_mixed_moment(target, s)?;
    let (empirical, std_error) = mean_and_std_error(&batch.monomial(s)?);
    if std_error == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let z_score = (empirical - exact) / std_error;
    Ok(MomentTestResult {
        index: s.to_vec(),
        empirical,
        exact,
        std_error,
        z_score,
        pass: z_score.abs() <= threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoSampleMomentResult {
    pub index: Vec<u32>,
    pub mean_a: f64,
    pub mean_b: f64,
    /// `sqrt(se_a² + se_b²)`.
    pub std_error: f64,
    pub z_score: f64,
    pub pass: bool,
}

/// Welch-style z-test that two batches share the mixed moment `s`.
pub fn moment_two_sample(
    a: &SampleBatch,
    b: &SampleBatch,
    s: &MomentIndex,
    threshold: f64,
) -> Result<TwoSampleMomentResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let (mean_a, se_a) = mean_and_std_error(&a.monomial(s)?);
    let (mean_b, se_b) = mean_and_std_error(&b.monomial(s)?);
    let std_error = se_a.hypot(se_b);
    if std_error == 0.0 {
        if s.is_zero() {
            return Ok(TwoSampleMomentResult {
                index: s.to_vec(),
                mean_a,
                mean_b,
                std_error,
                z_score: 0.0,
                pass: true,
            });
        }
        return Err(Error::ZeroVariance);
    }
    let z_score = (mean_a - mean_b) / std_error;
    Ok(TwoSampleMomentResult {
        index: s.to_vec(),
        mean_a,
        mean_b,
        std_error,
        z_score,
        pass: z_score.abs() <= threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsResult {
    pub coordinate: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Asymptotic critical value `c(α) = sqrt(−ln(α/2) / 2)` of `√N · D_N`.
pub fn ks_critical_value(level: f64) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt()
}

/// One-sample KS statistic `sup |F_N − F|` of `sample` (any order) against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

pub fn ks_marginal(batch: &SampleBatch, target: &DirichletParams, coordinate: usize) -> Result<KsResult> {
    ks_marginal_at(batch, target, coordinate, DEFAULT_KS_LEVEL)
}

/// KS test of one coordinate against its Beta(α_c, Σα − α_c) marginal.
pub fn ks_marginal_at(
    batch: &SampleBatch,
    target: &DirichletParams,
    coordinate: usize,
    level: f64,
) -> Result<KsResult> {
    if coordinate >= batch.dim() || coordinate >= target.dim() {
        return Err(Error::CoordinateOutOfRange {
            coordinate,
            dim: batch.dim().min(target.dim()),
        });
    }
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let (a, b) = target.marginal(coordinate);
    let statistic = ks_statistic(batch.column(coordinate), |x| beta_cdf(a, b, x));
    let threshold = ks_critical_value(level) / (batch.len() as f64).sqrt();
    Ok(KsResult {
        coordinate,
        statistic,
        threshold,
        pass: statistic <= threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyOptions {
    pub permutations: usize,
    pub level: f64,
    /// Cap on the number of pairwise distances held for the permutation test.
    pub max_pairs: usize,
    /// Each batch is thinned (evenly strided) to at most this many points.
    pub max_per_sample: usize,
    pub seed: u64,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        Self {
            // The smallest attainable p-value is 1/(B+1); it must reach the level.
            permutations: 1999,
            level: DEFAULT_ENERGY_LEVEL,
            max_pairs: 10_000_000,
            max_per_sample: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyResult {
    pub statistic: f64,
    pub permutation_p: f64,
    pub permutations: usize,
    pub points_per_sample: (usize, usize),
    pub seed: u64,
    pub pass: bool,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn mean_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in a {
        for y in b {
            acc.add(euclidean(x, y));
        }
    }
    acc.value() / (a.len() * b.len()) as f64
}

/// V-statistic `2E‖A−B‖ − E‖A−A′‖ − E‖B−B′‖`; exactly zero when `a == b`.
pub fn energy_statistic(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let ab = mean_distance(a, b);
    let aa = mean_distance(a, a);
    let bb = mean_distance(b, b);
    2.0 * ab - aa - bb
}

fn thin(batch: &SampleBatch, m: usize) -> Vec<Vec<f64>> {
    let n = batch.len();
    (0..m).map(|i| batch.row(i * n / m)).collect()
}

/// Energy-distance two-sample test with a permutation p-value.
///
/// Batches larger than `max_per_sample` are thinned by a deterministic stride (the
/// draws are i.i.d., so any fixed subset is a fair subsample). Permutation `r`
/// shuffles labels with stream `(seed, r)`, which keeps the p-value independent of
/// thread scheduling.
pub fn energy_two_sample(a: &SampleBatch, b: &SampleBatch, opts: &EnergyOptions) -> Result<EnergyResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if opts.permutations == 0 {
        return Err(Error::InvalidParameter(
            "energy test needs at least one permutation".into(),
        ));
    }
    let mut ma = a.len().min(opts.max_per_sample);
    let mut mb = b.len().min(opts.max_per_sample);
    while (ma + mb) * (ma + mb - 1) / 2 > opts.max_pairs && ma.max(mb) > 1 {
        ma = (ma - ma / 10).max(1);
        mb = (mb - mb / 10).max(1);
    }
    let xa = thin(a, ma);
    let xb = thin(b, mb);
    let statistic = energy_statistic(&xa, &xb);

    let pooled: Vec<&[f64]> = xa.iter().chain(&xb).map(Vec::as_slice).collect();
    let total = pooled.len();
    let mut dist = vec![0.0; total * total];
    for i in 0..total {
        for j in (i + 1)..total {
            let d = euclidean(pooled[i], pooled[j]);
            dist[i * total + j] = d;
            dist[j * total + i] = d;
        }
    }
    let s_all: f64 = dist.iter().sum();
    let labelled_stat = |first: &[usize], second: &[usize]| -> f64 {
        let within = |idx: &[usize]| -> f64 {
            idx.iter()
                .map(|&i| {
                    let row = &dist[i * total..(i + 1) * total];
                    idx.iter().map(|&j| row[j]).sum::<f64>()
                })
                .sum()
        };
        let s_aa = within(first);
        let s_bb = within(second);
        // Ordered-pair sums: s_all = s_aa + s_bb + 2 s_ab.
        let s_ab = (s_all - s_aa - s_bb) / 2.0;
        let (na, nb) = (first.len() as f64, second.len() as f64);
        2.0 * s_ab / (na * nb) - s_aa / (na * na) - s_bb / (nb * nb)
    };

    let identity: Vec<usize> = (0..total).collect();
    let observed = labelled_stat(&identity[..ma], &identity[ma..]);
    let exceed = (0..opts.permutations)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(opts.seed, r as u64);
            let mut perm = identity.clone();
            perm.shuffle(&mut rng);
            usize::from(labelled_stat(&perm[..ma], &perm[ma..]) >= observed)
        })
        .sum::<usize>();
    let permutation_p = (exceed + 1) as f64 / (opts.permutations + 1) as f64;
    Ok(EnergyResult {
        statistic,
        permutation_p,
        permutations: opts.permutations,
        points_per_sample: (ma, mb),
        seed: opts.seed,
        pass: permutation_p > opts.level,
    })
}
