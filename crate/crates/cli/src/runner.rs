//! Executes a config: scenarios in parallel, report writing serialized.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::report::{config_hash, VerificationReport};
use crate::scenarios::{run_scenario, ScenarioOutput};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `output_dir` from the config.
    pub out_dir: Option<PathBuf>,
    /// Worker threads; `None` uses every available core.
    pub workers: Option<usize>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub reports: Vec<(PathBuf, VerificationReport)>,
}

impl RunOutcome {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|(_, r)| r.pass)
    }

    pub fn exit_code(&self) -> u8 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }
}

/// Exit status for a finished or aborted run: 0 pass, 1 test failure, 2 config or IO error.
pub fn exit_code(result: &Result<RunOutcome, CliError>) -> u8 {
    match result {
        Ok(outcome) => outcome.exit_code(),
        Err(_) => 2,
    }
}

pub fn run(config_path: &Path, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let (config, bytes) = ExperimentConfig::load(config_path)?;
    run_config(&config, &config_hash(&bytes), opts)
}

pub fn run_config(config: &ExperimentConfig, hash: &str, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    config.validate()?;
    let out_dir = opts.out_dir.clone().unwrap_or_else(|| config.output_dir.clone());
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = opts.workers {
        if w == 0 {
            return Err(CliError::Invalid("--workers must be at least 1".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Invalid(format!("cannot start worker pool: {e}")))?;

    let results: Vec<(Result<ScenarioOutput, CliError>, f64)> = pool.install(|| {
        config
            .scenarios
            .par_iter()
            .map(|scenario| {
                let start = Instant::now();
                let out = run_scenario(scenario);
                (out, start.elapsed().as_secs_f64())
            })
            .collect()
    });

    let mut reports = Vec::with_capacity(results.len());
    for (scenario, (result, seconds)) in config.scenarios.iter().zip(results) {
        let output = result?;
        for (name, contents) in &output.artifacts {
            let path = out_dir.join(name);
            std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        }
        let report = VerificationReport::new(
            scenario.id(),
            scenario.kind(),
            scenario.seed(),
            hash,
            output.records,
            seconds,
        );
        let path = out_dir.join(format!("{}.json", scenario.id()));
        std::fs::write(&path, report.to_json()?).map_err(|e| CliError::io(&path, e))?;
        reports.push((path, report));
    }
    Ok(RunOutcome { reports })
}

/// Drops timing fields so two reports of the same config compare equal.
pub fn strip_timing(report: &mut serde_json::Value) {
    if let Some(map) = report.as_object_mut() {
        for key in crate::report::TIMING_FIELDS {
            map.remove(key);
        }
    }
}
