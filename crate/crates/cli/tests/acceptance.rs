//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Criteria 1 and 3 to 6 are read from a single run of the bundled
//! `configs/acceptance.json` (one worker, so per-scenario timings are honest).
//! Criterion 7 reruns the same config and compares every output file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rwa_cli::config::{ExperimentConfig, Scenario};
use rwa_cli::report::{TestRecord, VerificationReport};
use rwa_cli::runner::{run, strip_timing, RunOptions};

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

struct Outcome {
    pass: bool,
    detail: String,
    seconds: f64,
}

fn report_line(number: usize, name: &str, budget: f64, outcome: Outcome) -> bool {
    let in_budget = outcome.seconds < budget;
    let pass = outcome.pass && in_budget;
    println!(
        "{} [{number}] {name}: {} ({:.2} s, budget {budget:.0} s{})",
        if pass { "PASS" } else { "FAIL" },
        outcome.detail,
        outcome.seconds,
        if in_budget { "" } else { ", over budget" }
    );
    pass
}

fn find<'a>(reports: &'a [(PathBuf, VerificationReport)], id: &str) -> &'a VerificationReport {
    &reports
        .iter()
        .find(|(_, r)| r.scenario_id == id)
        .unwrap_or_else(|| panic!("no report for scenario '{id}'"))
        .1
}

/// Every record passes, and the report is not empty.
fn summarize(report: &VerificationReport, extra: Result<String, String>) -> Outcome {
    let mut detail = format!("{} tests, {} failures", report.tests, report.failures);
    if let Some(first) = report.failed_records().next() {
        detail.push_str(&format!("; first failure: {}", first.describe()));
    }
    let extra_ok = match extra {
        Ok(note) => {
            if !note.is_empty() {
                detail.push_str("; ");
                detail.push_str(&note);
            }
            true
        }
        Err(problem) => {
            detail.push_str("; ");
            detail.push_str(&problem);
            false
        }
    };
    Outcome {
        pass: report.pass && extra_ok,
        detail,
        seconds: report.wall_clock_seconds,
    }
}

/// The bundled theorem scenario really is the criterion: five fixtures, 2×10⁵
/// draws per path, two paths, moments of order ≤ 3, the stated thresholds, and
/// every fixture tested by moments, KS and energy.
fn theorem_shape(config: &ExperimentConfig, report: &VerificationReport) -> Result<String, String> {
    let Some(Scenario::Theorem(t)) = config.scenarios.iter().find(|s| s.id() == "theorem") else {
        return Err("no theorem scenario".into());
    };
    if t.fixtures.len() != 5 || t.samples != 200_000 || t.paths.len() != 2 || t.max_order != 3 {
        return Err(format!("scenario shape differs from the criterion: {t:?}"));
    }
    if t.z_threshold > 5.0 || t.ks_level < 0.001 || t.energy.level < 0.001 {
        return Err("thresholds looser than the criterion".into());
    }
    let mut kinds: BTreeMap<&str, [usize; 3]> = BTreeMap::new();
    for r in &report.records {
        match r {
            TestRecord::MomentZ { fixture, .. } => kinds.entry(fixture).or_default()[0] += 1,
            TestRecord::Ks { fixture, .. } => kinds.entry(fixture).or_default()[1] += 1,
            TestRecord::Energy { fixture, .. } => kinds.entry(fixture).or_default()[2] += 1,
            _ => {}
        }
    }
    if kinds.len() != 5 || kinds.values().any(|c| c.contains(&0)) {
        return Err(format!("not every fixture has moment, KS and energy tests: {kinds:?}"));
    }
    let worst_z = report
        .records
        .iter()
        .filter_map(|r| match r {
            TestRecord::MomentZ { z_score, .. } => Some(z_score.abs()),
            _ => None,
        })
        .fold(0.0f64, f64::max);
    let min_p = report
        .records
        .iter()
        .filter_map(|r| match r {
            TestRecord::Energy { p_value, .. } => Some(*p_value),
            _ => None,
        })
        .fold(1.0f64, f64::min);
    Ok(format!("max |z| = {worst_z:.2}, min energy p = {min_p:.3}"))
}

fn max_tolerance(report: &VerificationReport) -> f64 {
    report
        .records
        .iter()
        .filter_map(|r| match r {
            TestRecord::MomentOracle { tolerance, .. }
            | TestRecord::DirmultNormalization { tolerance, .. }
            | TestRecord::ProductIdentity { tolerance, .. } => Some(*tolerance),
            _ => None,
        })
        .fold(0.0f64, f64::max)
}

fn moments_shape(report: &VerificationReport) -> Result<String, String> {
    let mut specs = 0;
    let mut worst = 0.0f64;
    for r in &report.records {
        if let TestRecord::MomentOracle {
            specs: s,
            max_rel_error,
            ..
        } = r
        {
            specs += s;
            worst = worst.max(*max_rel_error);
        }
    }
    // 4^4 + 2·4^6 + 4^9 parameter matrices.
    if specs != 256 + 2 * 4096 + 262_144 || max_tolerance(report) > 1e-9 {
        return Err(format!(
            "grid covers {specs} specs at tolerance {:e}",
            max_tolerance(report)
        ));
    }
    Ok(format!("{specs} specs, max relative error {worst:.2e}"))
}

fn dirmult_shape(report: &VerificationReport) -> Result<String, String> {
    let mut worst = 0.0f64;
    let mut dims = Vec::new();
    for r in &report.records {
        if let TestRecord::DirmultNormalization {
            dim,
            max_trials,
            max_abs_error,
            ..
        } = r
        {
            if *max_trials < 10 {
                return Err(format!("only {max_trials} trials"));
            }
            dims.push(*dim);
            worst = worst.max(*max_abs_error);
        }
    }
    if dims != [2, 3, 4] || max_tolerance(report) > 1e-10 {
        return Err(format!("dimensions {dims:?} at tolerance {:e}", max_tolerance(report)));
    }
    Ok(format!("max |Σp − 1| = {worst:.2e}"))
}

fn stieltjes_shape(report: &VerificationReport) -> Result<String, String> {
    let mut residuals: BTreeMap<(String, u32), (usize, f64)> = BTreeMap::new();
    let mut radii = Vec::new();
    for r in &report.records {
        match r {
            TestRecord::StieltjesResidual {
                check,
                n,
                residual,
                tolerance,
                ..
            } => {
                let limit = if *n <= 3 { 1e-8 } else { 1e-6 };
                if *tolerance > limit {
                    return Err(format!("{check} n={n} checked at {tolerance:e}, criterion {limit:e}"));
                }
                let e = residuals.entry((check.clone(), *n)).or_default();
                e.0 += 1;
                e.1 = e.1.max(*residual);
            }
            TestRecord::StieltjesNormalization { z_re, z_im, .. } => radii.push(z_re.hypot(*z_im)),
            _ => {}
        }
    }
    for check in ["equation3", "equation1"] {
        for n in 2..=4 {
            if residuals.get(&(check.to_string(), n)).map(|e| e.0) != Some(4) {
                return Err(format!("{check} n={n} not checked on the 4-point grid"));
            }
        }
    }
    for r in [10.0, 1e3, 1e6] {
        if !radii.contains(&r) {
            return Err(format!("normalization not checked at |z| = {r}"));
        }
    }
    let worst: Vec<String> = residuals
        .iter()
        .map(|((c, n), (_, w))| format!("{c} n={n} {w:.1e}"))
        .collect();
    Ok(worst.join(", "))
}

fn kerov_shape(report: &VerificationReport) -> Result<String, String> {
    let mut alphas = Vec::new();
    let mut worst = 0.0f64;
    let mut max_t = 0.0f64;
    for r in &report.records {
        if let TestRecord::ProductIdentity {
            alpha, t, abs_error, ..
        } = r
        {
            if !alphas.contains(alpha) {
                alphas.push(alpha.clone());
            }
            worst = worst.max(*abs_error);
            max_t = t.iter().fold(max_t, |m, ti| m.max(ti.abs()));
        }
    }
    if alphas != [vec![0.5, 0.5], vec![1.0, 2.0]] || max_t != 0.5 || max_tolerance(report) > 1e-6 {
        return Err(format!(
            "alphas {alphas:?}, max |t| {max_t}, tolerance {:e}",
            max_tolerance(report)
        ));
    }
    Ok(format!("max error {worst:.2e}"))
}

/// Output files of a run, with timing fields removed from JSON reports.
fn normalized_outputs(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).expect("output directory") {
        let path = entry.expect("directory entry").path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let text = std::fs::read_to_string(&path).expect("readable output");
        let text = if name.ends_with(".json") {
            let mut v: serde_json::Value = serde_json::from_str(&text).expect("report JSON");
            strip_timing(&mut v);
            serde_json::to_string(&v).unwrap()
        } else {
            text
        };
        out.insert(name, text);
    }
    out
}

fn main() {
    let config_file = config_path("acceptance.json");
    let config = ExperimentConfig::load(&config_file).expect("bundled config parses").0;
    let first_dir = tempfile::tempdir().expect("temp dir");
    let opts = RunOptions {
        out_dir: Some(first_dir.path().to_path_buf()),
        workers: Some(1),
    };
    let start = Instant::now();
    let outcome = run(&config_file, &opts).expect("bundled config runs");
    let first_run_seconds = start.elapsed().as_secs_f64();
    let reports = &outcome.reports;
    let mut all = true;

    let theorem = find(reports, "theorem");
    all &= report_line(
        1,
        "theorem statistical suite",
        60.0,
        summarize(theorem, theorem_shape(&config, theorem)),
    );

    let start = Instant::now();
    let planted_dir = tempfile::tempdir().expect("temp dir");
    let planted = run(
        &config_path("planted-alternative.json"),
        &RunOptions {
            out_dir: Some(planted_dir.path().to_path_buf()),
            workers: Some(1),
        },
    );
    let power = match planted {
        Ok(o) => {
            let r = &o.reports[0].1;
            let failing: Vec<String> = r.failed_records().take(3).map(TestRecord::describe).collect();
            Outcome {
                pass: o.exit_code() == 1 && r.failures > 0,
                detail: format!(
                    "{} of {} tests reject the perturbed target, e.g. {}",
                    r.failures,
                    r.tests,
                    failing.join("; ")
                ),
                seconds: start.elapsed().as_secs_f64(),
            }
        }
        Err(e) => Outcome {
            pass: false,
            detail: format!("run failed: {e}"),
            seconds: start.elapsed().as_secs_f64(),
        },
    };
    all &= report_line(2, "planted-alternative power check", 15.0, power);

    let moments = find(reports, "moments");
    all &= report_line(
        3,
        "moment-oracle equality",
        30.0,
        summarize(moments, moments_shape(moments)),
    );
    let dirmult = find(reports, "dirmult");
    all &= report_line(
        4,
        "Dirichlet-multinomial normalization",
        5.0,
        summarize(dirmult, dirmult_shape(dirmult)),
    );
    let stieltjes = find(reports, "stieltjes");
    all &= report_line(
        5,
        "Stieltjes residuals",
        10.0,
        summarize(stieltjes, stieltjes_shape(stieltjes)),
    );
    let kerov = find(reports, "kerov-tsilevich");
    all &= report_line(
        6,
        "Kerov-Tsilevich product identity",
        5.0,
        summarize(kerov, kerov_shape(kerov)),
    );

    let start = Instant::now();
    let second_dir = tempfile::tempdir().expect("temp dir");
    let rerun = run(
        &config_file,
        &RunOptions {
            out_dir: Some(second_dir.path().to_path_buf()),
            workers: Some(1),
        },
    );
    let determinism = match rerun {
        Ok(_) => {
            let a = normalized_outputs(first_dir.path());
            let b = normalized_outputs(second_dir.path());
            let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
            Outcome {
                pass: a.len() == b.len() && differing.is_empty() && a.len() >= config.scenarios.len(),
                detail: if differing.is_empty() {
                    format!("{} output files identical apart from timing", a.len())
                } else {
                    format!("files differ: {differing:?}")
                },
                seconds: start.elapsed().as_secs_f64(),
            }
        }
        Err(e) => Outcome {
            pass: false,
            detail: format!("rerun failed: {e}"),
            seconds: start.elapsed().as_secs_f64(),
        },
    };
    // The rerun repeats the whole config, so its budget is the first run's time plus slack.
    all &= report_line(7, "determinism", first_run_seconds * 1.5 + 10.0, determinism);

    if !all {
        println!("acceptance: FAILED");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
