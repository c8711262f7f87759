//! Scenario runners: each turns a config descriptor into test records.

use num_complex::Complex64;
use rayon::prelude::*;
use rwa_core::moments::{product_identity_check, rwa_moment_closed_form, DirMultParams, ExpansionPlan};
use rwa_core::rwa::{resolve_variant_reading, variant_spec, DirectSampler, VariantReading};
use rwa_core::stattest::{energy_two_sample, ks_marginal_at, moment_ztest, EnergyOptions};
use rwa_core::stieltjes::{
    equation1_check, equation3_residual, normalization_error, Arcsine, PowerSemicircle, PowerSemicircleParams,
    ResidualPoint, StieltjesFn,
};
use rwa_core::{
    dirmult_normalization_check, sample_z_batch, DirichletParams, MomentIndex, RngStream, RwaSpec, SampleBatch,
    SamplingPath,
};

use crate::config::{
    DirmultScenario, KerovTsilevichScenario, MomentsScenario, Scenario, StieltjesScenario, TheoremScenario,
    VariantScenario,
};
use crate::error::CliError;
use crate::report::TestRecord;

/// Records plus any CSV artifacts, as `(file name, contents)`.
#[derive(Debug, Default)]
pub struct ScenarioOutput {
    pub records: Vec<TestRecord>,
    pub artifacts: Vec<(String, String)>,
}

impl From<Vec<TestRecord>> for ScenarioOutput {
    fn from(records: Vec<TestRecord>) -> Self {
        Self {
            records,
            artifacts: Vec::new(),
        }
    }
}

pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioOutput, CliError> {
    Ok(match scenario {
        Scenario::Theorem(s) => run_theorem(s)?.into(),
        Scenario::Moments(s) => run_moments(s)?.into(),
        Scenario::Dirmult(s) => run_dirmult(s)?.into(),
        Scenario::Stieltjes(s) => run_stieltjes(s),
        Scenario::KerovTsilevich(s) => run_kerov_tsilevich(s)?.into(),
        Scenario::Variant(s) => run_variant(s)?.into(),
    })
}

/// Stream id of `(fixture, path)` draws within a theorem scenario.
pub fn sample_stream(fixture: usize, path: usize) -> u64 {
    (fixture as u64) << 8 | path as u64
}

/// Seed of the energy test's permutation streams for one fixture.
fn energy_seed(seed: u64, fixture: usize) -> u64 {
    seed ^ (fixture as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn moment_records(
    fixture: &str,
    path: &str,
    batch: &SampleBatch,
    target: &DirichletParams,
    max_order: u32,
    threshold: f64,
) -> Vec<TestRecord> {
    MomentIndex::enumerate(batch.dim(), max_order)
        .iter()
        .map(|s| match moment_ztest(batch, target, s, threshold) {
            Ok(r) => TestRecord::MomentZ {
                fixture: fixture.to_string(),
                path: path.to_string(),
                index: r.index,
                empirical: r.empirical,
                exact: r.exact,
                std_error: r.std_error,
                z_score: r.z_score,
                threshold,
                pass: r.pass,
            },
            Err(e) => TestRecord::error(format!("moment {fixture}/{path} s={s}"), e),
        })
        .collect()
}

pub fn run_theorem(sc: &TheoremScenario) -> Result<Vec<TestRecord>, CliError> {
    let specs = sc
        .fixtures
        .iter()
        .map(|f| {
            let spec = f.spec()?;
            let target = f.target(&spec)?;
            Ok((spec, target))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let jobs: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|fi| (0..sc.paths.len()).map(move |pi| (fi, pi)))
        .collect();
    let batches: Vec<rwa_core::Result<SampleBatch>> = jobs
        .par_iter()
        .map(|&(fi, pi)| {
            let mut rng = RngStream::new(sc.seed, sample_stream(fi, pi));
            sample_z_batch(&specs[fi].0, sc.paths[pi], sc.samples, &mut rng)
        })
        .collect();

    let mut records = Vec::new();
    let mut batches = batches.into_iter();
    for (fi, (fixture, (_, target))) in sc.fixtures.iter().zip(&specs).enumerate() {
        let name = fixture.name.as_str();
        let mut drawn: Vec<Option<SampleBatch>> = Vec::with_capacity(sc.paths.len());
        for path in &sc.paths {
            let path_name = path.name();
            match batches.next().expect("one batch per job") {
                Ok(batch) => {
                    records.extend(moment_records(
                        name,
                        path_name,
                        &batch,
                        target,
                        sc.max_order,
                        sc.z_threshold,
                    ));
                    for c in 0..batch.dim() {
                        records.push(match ks_marginal_at(&batch, target, c, sc.ks_level) {
                            Ok(r) => TestRecord::Ks {
                                fixture: name.to_string(),
                                path: path_name.to_string(),
                                coordinate: c,
                                statistic: r.statistic,
                                threshold: r.threshold,
                                level: sc.ks_level,
                                pass: r.pass,
                            },
                            Err(e) => TestRecord::error(format!("ks {name}/{path_name} coordinate {c}"), e),
                        });
                    }
                    drawn.push(Some(batch));
                }
                Err(e) => {
                    records.push(TestRecord::error(format!("sampling {name}/{path_name}"), e));
                    drawn.push(None);
                }
            }
        }
        let opts = EnergyOptions {
            permutations: sc.energy.permutations,
            level: sc.energy.level,
            max_per_sample: sc.energy.max_per_sample,
            seed: energy_seed(sc.seed, fi),
            ..EnergyOptions::default()
        };
        for pi in 1..sc.paths.len() {
            let (Some(a), Some(b)) = (&drawn[0], &drawn[pi]) else {
                continue;
            };
            let paths = [sc.paths[0].name().to_string(), sc.paths[pi].name().to_string()];
            records.push(match energy_two_sample(a, b, &opts) {
                Ok(r) => TestRecord::Energy {
                    fixture: name.to_string(),
                    paths,
                    statistic: r.statistic,
                    p_value: r.permutation_p,
                    permutations: r.permutations,
                    points_per_sample: r.points_per_sample,
                    level: opts.level,
                    pass: r.pass,
                },
                Err(e) => TestRecord::error(format!("energy {name} {} vs {}", paths[0], paths[1]), e),
            });
        }
    }
    Ok(records)
}

/// Relative error of the expansion against the closed form, maximized over the plans.
fn worst_moment_error(spec: &RwaSpec, plans: &[ExpansionPlan]) -> rwa_core::Result<(f64, usize)> {
    let model = spec.model();
    let mut worst = (0.0f64, 0usize);
    for (i, plan) in plans.iter().enumerate() {
        let closed = rwa_moment_closed_form(spec, plan.index())?;
        let expanded = plan.evaluate(&model)?;
        let err = (expanded - closed).abs() / closed.abs();
        // NaN must surface as a failure, not be skipped by the comparison.
        if err.is_nan() || err > worst.0 {
            worst = (if err.is_nan() { f64::INFINITY } else { err }, i);
        }
    }
    Ok(worst)
}

/// Row-major matrix number `code` in the base-`entries.len()` enumeration.
fn grid_matrix(entries: &[f64], rows: usize, cols: usize, mut code: usize) -> Vec<Vec<f64>> {
    let m = entries.len();
    let mut flat = vec![0.0; rows * cols];
    for v in flat.iter_mut().rev() {
        *v = entries[code % m];
        code /= m;
    }
    flat.chunks(cols).map(<[f64]>::to_vec).collect()
}

fn oracle_record(matrices: &[Vec<Vec<f64>>], rows: usize, cols: usize, max_order: u32, tolerance: f64) -> TestRecord {
    let indices = MomentIndex::enumerate(cols, max_order);
    let plans = match indices
        .iter()
        .map(|s| ExpansionPlan::new(s, rows, max_order))
        .collect::<rwa_core::Result<Vec<_>>>()
    {
        Ok(p) => p,
        Err(e) => return TestRecord::error(format!("moment oracle {rows}x{cols}"), e),
    };
    let results: Vec<rwa_core::Result<(f64, usize)>> = matrices
        .par_iter()
        .map(|m| worst_moment_error(&RwaSpec::new(m.clone())?, &plans))
        .collect();
    let mut worst = (0.0f64, 0usize, 0usize);
    for (mi, r) in results.into_iter().enumerate() {
        match r {
            Ok((err, si)) if err > worst.0 => worst = (err, mi, si),
            Ok(_) => {}
            Err(e) => return TestRecord::error(format!("moment oracle {:?}", matrices[mi]), e),
        }
    }
    TestRecord::MomentOracle {
        rows,
        cols,
        specs: matrices.len(),
        indices: indices.len(),
        max_rel_error: worst.0,
        worst_spec: matrices.get(worst.1).cloned().unwrap_or_default(),
        worst_index: indices.get(worst.2).map(|s| s.to_vec()).unwrap_or_default(),
        tolerance,
        pass: worst.0 < tolerance,
    }
}

pub fn run_moments(sc: &MomentsScenario) -> Result<Vec<TestRecord>, CliError> {
    let mut records = Vec::new();
    if !sc.entries.is_empty() {
        for rows in 2..=sc.max_rows {
            for cols in 2..=sc.max_cols {
                let count = sc
                    .entries
                    .len()
                    .checked_pow((rows * cols) as u32)
                    .ok_or_else(|| CliError::Invalid(format!("{rows}x{cols} grid is too large to enumerate")))?;
                let matrices: Vec<Vec<Vec<f64>>> =
                    (0..count).map(|c| grid_matrix(&sc.entries, rows, cols, c)).collect();
                records.push(oracle_record(&matrices, rows, cols, sc.max_order, sc.tolerance));
            }
        }
    }
    for m in &sc.specs {
        records.push(oracle_record(
            std::slice::from_ref(m),
            m.len(),
            m[0].len(),
            sc.max_order,
            sc.tolerance,
        ));
    }
    Ok(records)
}

pub fn run_dirmult(sc: &DirmultScenario) -> Result<Vec<TestRecord>, CliError> {
    let mut records = Vec::new();
    for dim in 2..=sc.max_dim {
        let count = sc
            .entries
            .len()
            .checked_pow(dim as u32)
            .ok_or_else(|| CliError::Invalid(format!("dimension {dim} grid is too large to enumerate")))?;
        let mut worst = (0.0f64, Vec::new(), 0u32);
        let mut failure = None;
        'grid: for code in 0..count {
            let alpha = grid_matrix(&sc.entries, 1, dim, code).remove(0);
            let params = DirichletParams::new(alpha.clone())?;
            for trials in 0..=sc.max_trials {
                match dirmult_normalization_check(&DirMultParams::new(params.clone(), trials)) {
                    Ok(total) => {
                        let err = (total - 1.0).abs();
                        if err.is_nan() || err > worst.0 {
                            worst = (if err.is_nan() { f64::INFINITY } else { err }, alpha.clone(), trials);
                        }
                    }
                    Err(e) => {
                        failure = Some(TestRecord::error(
                            format!("dirichlet-multinomial {alpha:?} trials {trials}"),
                            e,
                        ));
                        break 'grid;
                    }
                }
            }
        }
        records.push(failure.unwrap_or(TestRecord::DirmultNormalization {
            dim,
            vectors: count,
            max_trials: sc.max_trials,
            max_abs_error: worst.0,
            worst_alpha: worst.1,
            worst_trials: worst.2,
            tolerance: sc.tolerance,
            pass: worst.0 <= sc.tolerance,
        }));
    }
    Ok(records)
}

fn residual_records(check: &str, points: &[ResidualPoint], tolerance: f64) -> Vec<TestRecord> {
    points
        .iter()
        .map(|p| TestRecord::StieltjesResidual {
            check: check.to_string(),
            n: p.n,
            z: p.z,
            lhs: p.lhs,
            rhs: p.rhs,
            residual: p.residual,
            tolerance,
            pass: p.residual < tolerance,
        })
        .collect()
}

/// CSV with header `n,z,lhs,rhs,residual`, LF line endings, shortest round-trip floats.
pub fn residual_csv(points: &[ResidualPoint]) -> String {
    let mut out = String::from("n,z,lhs,rhs,residual\n");
    for p in points {
        out.push_str(&format!("{},{:?},{:?},{:?},{:?}\n", p.n, p.z, p.lhs, p.rhs, p.residual));
    }
    out
}

pub fn run_stieltjes(sc: &StieltjesScenario) -> ScenarioOutput {
    let mut out = ScenarioOutput::default();
    type Check = fn(u32, &[f64]) -> rwa_core::Result<Vec<ResidualPoint>>;
    let checks: [(&str, Check); 2] = [("equation3", equation3_residual), ("equation1", equation1_check)];
    for (check, f) in checks {
        let mut all = Vec::new();
        for o in &sc.orders {
            match f(o.n, &sc.grid) {
                Ok(points) => {
                    out.records.extend(residual_records(check, &points, o.tolerance));
                    all.extend(points);
                }
                Err(e) => out.records.push(TestRecord::error(format!("{check} n={}", o.n), e)),
            }
        }
        out.artifacts
            .push((format!("{}-{check}.csv", sc.id), residual_csv(&all)));
    }

    let mut transforms: Vec<(String, Box<dyn StieltjesFn>)> = vec![("arcsine".into(), Box::new(Arcsine))];
    for o in &sc.orders {
        if let Ok(p) = PowerSemicircleParams::new(o.n) {
            transforms.push((format!("power-semicircle-{}", o.n), Box::new(PowerSemicircle::new(p))));
        }
    }
    for &r in &sc.normalization_radii {
        for (name, f) in &transforms {
            for z in [Complex64::new(r, 0.0), Complex64::new(0.0, r)] {
                let bound = 2.0 / r;
                out.records.push(match normalization_error(f.as_ref(), z) {
                    Ok(error) => TestRecord::StieltjesNormalization {
                        transform: name.clone(),
                        z_re: z.re,
                        z_im: z.im,
                        error,
                        bound,
                        pass: error <= bound,
                    },
                    Err(e) => TestRecord::error(format!("normalization {name} z={z}"), e),
                });
            }
        }
    }
    out
}

/// All points of `grid^k`, first coordinate varying slowest.
fn cartesian_power(grid: &[f64], k: usize) -> Vec<Vec<f64>> {
    (0..grid.len().pow(k as u32))
        .map(|c| grid_matrix(grid, 1, k, c).remove(0))
        .collect()
}

pub fn run_kerov_tsilevich(sc: &KerovTsilevichScenario) -> Result<Vec<TestRecord>, CliError> {
    let mut records = Vec::new();
    for alpha in &sc.alphas {
        let params = DirichletParams::new(alpha.clone())?;
        for t in cartesian_power(&sc.t_grid, alpha.len()) {
            // Truncate well below the tolerance so the comparison measures the identity.
            records.push(match product_identity_check(&params, &t, sc.tolerance / 100.0) {
                Ok(c) => TestRecord::ProductIdentity {
                    alpha: alpha.clone(),
                    t: t.clone(),
                    series: c.series,
                    product: c.product,
                    truncation_order: c.truncation_order,
                    tail_bound: c.tail_bound,
                    abs_error: c.abs_error(),
                    tolerance: sc.tolerance,
                    pass: c.abs_error() <= sc.tolerance,
                },
                Err(e) => TestRecord::error(format!("product identity α={alpha:?} t={t:?}"), e),
            });
        }
    }
    Ok(records)
}

pub fn run_variant(sc: &VariantScenario) -> Result<Vec<TestRecord>, CliError> {
    let mut records = Vec::new();
    for (ai, alpha) in sc.alphas.iter().enumerate() {
        let resolution = match resolve_variant_reading(alpha, sc.max_order, sc.tolerance) {
            Ok(r) => r,
            Err(e) => {
                records.push(TestRecord::error(format!("variant α={alpha:?}"), e));
                continue;
            }
        };
        records.push(TestRecord::VariantReading {
            alpha: alpha.clone(),
            symmetric_error: resolution.symmetric_error,
            asymmetric_error: resolution.asymmetric_error,
            enabled: resolution.enabled,
            tolerance: sc.tolerance,
            pass: resolution.enabled.is_some(),
        });
        let Some(reading) = resolution.enabled else { continue };
        if sc.samples == 0 {
            continue;
        }
        let scenario = variant_spec(alpha, 2, reading)?;
        let sampler = DirectSampler::new(&scenario.model);
        let mut rng = RngStream::new(sc.seed, ai as u64);
        let mut batch = SampleBatch::with_capacity(2, sc.samples, sc.seed, ai as u64);
        for _ in 0..sc.samples {
            batch.push(sampler.sample(&mut rng)?.z.coords())?;
        }
        let label = format!(
            "variant-{}-{ai}",
            match reading {
                VariantReading::Symmetric => "symmetric",
                VariantReading::Asymmetric => "asymmetric",
            }
        );
        records.extend(moment_records(
            &label,
            SamplingPath::Direct.name(),
            &batch,
            &scenario.claimed_target,
            3,
            rwa_core::stattest::DEFAULT_Z_THRESHOLD,
        ));
    }
    Ok(records)
}
