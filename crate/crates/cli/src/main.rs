use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rwa_cli::config::{EnergyConfig, FixtureConfig, MomentsScenario, TheoremScenario};
use rwa_cli::report::{TestRecord, VerificationReport};
use rwa_cli::runner::{exit_code, run, RunOptions};
use rwa_cli::{fixtures, scenarios};
use rwa_core::stieltjes::{equation1_check, equation3_residual};
use rwa_core::{sample_z_batch, RngStream, RwaSpec, SamplingPath};

#[derive(Parser)]
#[command(
    name = "rwa",
    version,
    about = "Checks for randomly weighted averages of Dirichlet vectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a JSON experiment config and write one report per scenario.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Report directory (overrides `output_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Draw `z` vectors and write them as CSV.
    Sample {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = PathArg::Direct)]
        path: PathArg,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Moment, KS and energy tests of one spec against its column-sum target.
    VerifyTheorem {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        /// Hypothesized target parameters, comma separated (defaults to the column sums).
        #[arg(long)]
        target: Option<String>,
        /// Report file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact moment expansion against the closed form.
    VerifyMoments {
        #[command(flatten)]
        spec: SpecArgs,
        /// Check every matrix with n, k ≤ 3 and entries in {0.5, 1, 2, 3.5}.
        #[arg(long, conflicts_with_all = ["alphas", "fixture"])]
        grid: bool,
        #[arg(long, default_value_t = 5)]
        max_order: u32,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Derivative identity of the power-semicircle transform; writes `n,z,lhs,rhs,residual` CSV.
    Stieltjes {
        #[arg(long)]
        n: u32,
        /// Comma-separated real points, each at least 1.25.
        #[arg(long, value_delimiter = ',', default_value = "1.5,2,3,5")]
        grid: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Check::Equation3)]
        check: Check,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SpecArgs {
    /// Parameter matrix, rows separated by ';' and entries by ',', e.g. "1,2,3;4,5,6".
    #[arg(long, conflicts_with = "fixture")]
    alphas: Option<String>,
    /// Built-in fixture: van-assche, johnson-kotz, corollary, asymmetric, half-integer.
    #[arg(long)]
    fixture: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Direct,
    GammaPath,
    GammaRatio,
}

impl From<PathArg> for SamplingPath {
    fn from(p: PathArg) -> Self {
        match p {
            PathArg::Direct => SamplingPath::Direct,
            PathArg::GammaPath => SamplingPath::GammaPath,
            PathArg::GammaRatio => SamplingPath::GammaRatio,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Equation3,
    Equation1,
}

/// Errors here are usage or IO problems.
struct Usage(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.into())
    }
}

impl SpecArgs {
    fn fixture_config(&self) -> anyhow::Result<FixtureConfig> {
        match (&self.alphas, &self.fixture) {
            (Some(text), None) => Ok(FixtureConfig {
                name: "custom".into(),
                alphas: Some(fixtures::parse_alphas(text).map_err(anyhow::Error::msg)?),
                target: None,
            }),
            (None, Some(name)) => {
                if fixtures::named(name).is_none() {
                    bail!(
                        "unknown fixture '{name}'; known: {}",
                        fixtures::names().collect::<Vec<_>>().join(", ")
                    );
                }
                Ok(FixtureConfig {
                    name: name.clone(),
                    alphas: None,
                    target: None,
                })
            }
            _ => bail!("give exactly one of --alphas or --fixture"),
        }
    }

    fn spec(&self) -> anyhow::Result<RwaSpec> {
        Ok(self.fixture_config()?.spec()?)
    }
}

fn write_output(out: Option<&Path>, contents: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, contents).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().lock().write_all(contents.as_bytes())?;
            Ok(())
        }
    }
}

/// Prints a summary, writes the report if asked, and maps the verdict to an exit status.
fn finish(report: &VerificationReport, out: Option<&Path>) -> Result<u8, Usage> {
    for r in report.failed_records() {
        println!("FAIL {}", r.describe());
    }
    println!(
        "{} {} ({} tests, {} failures, {:.2} s)",
        if report.pass { "PASS" } else { "FAIL" },
        report.scenario_id,
        report.tests,
        report.failures,
        report.wall_clock_seconds
    );
    if let Some(path) = out {
        std::fs::write(path, report.to_json()?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(if report.pass { 0 } else { 1 })
}

fn execute(command: Command) -> Result<u8, Usage> {
    match command {
        Command::Run { config, out, workers } => {
            let result = run(&config, &RunOptions { out_dir: out, workers });
            match &result {
                Ok(outcome) => {
                    for (path, report) in &outcome.reports {
                        for r in report.failed_records() {
                            println!("FAIL {}: {}", report.scenario_id, r.describe());
                        }
                        println!(
                            "{} {} ({} tests, {} failures, {:.2} s) -> {}",
                            if report.pass { "PASS" } else { "FAIL" },
                            report.scenario_id,
                            report.tests,
                            report.failures,
                            report.wall_clock_seconds,
                            path.display()
                        );
                    }
                }
                Err(e) => eprintln!("error: {e}"),
            }
            Ok(exit_code(&result))
        }
        Command::Sample {
            spec,
            samples,
            seed,
            path,
            out,
        } => {
            let spec = spec.spec()?;
            let batch = sample_z_batch(&spec, path.into(), samples, &mut RngStream::new(seed, 0))?;
            let header: Vec<String> = (1..=spec.k()).map(|j| format!("z_{j}")).collect();
            let mut csv = header.join(",");
            csv.push('\n');
            for row in batch.rows() {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
                csv.push_str(&cells.join(","));
                csv.push('\n');
            }
            write_output(out.as_deref(), &csv)?;
            Ok(0)
        }
        Command::VerifyTheorem {
            spec,
            seed,
            samples,
            target,
            out,
        } => {
            let mut fixture = spec.fixture_config()?;
            if let Some(t) = target {
                let parsed = fixtures::parse_alphas(&t).map_err(anyhow::Error::msg)?;
                fixture.target = Some(parsed.into_iter().flatten().collect());
            }
            let sc = TheoremScenario {
                id: format!("verify-theorem-{}", fixture.name),
                seed,
                fixtures: vec![fixture],
                samples,
                paths: vec![SamplingPath::Direct, SamplingPath::GammaPath],
                max_order: 3,
                z_threshold: rwa_core::stattest::DEFAULT_Z_THRESHOLD,
                ks_level: rwa_core::stattest::DEFAULT_KS_LEVEL,
                energy: EnergyConfig::default(),
            };
            let spec = sc.fixtures[0].spec()?;
            sc.fixtures[0].target(&spec)?;
            let start = Instant::now();
            let records = scenarios::run_theorem(&sc)?;
            let report = VerificationReport::new(&sc.id, "theorem", seed, "", records, start.elapsed().as_secs_f64());
            finish(&report, out.as_deref())
        }
        Command::VerifyMoments {
            spec,
            grid,
            max_order,
            tolerance,
            out,
        } => {
            let sc = if grid {
                MomentsScenario {
                    id: "verify-moments-grid".into(),
                    seed: 0,
                    entries: vec![0.5, 1.0, 2.0, 3.5],
                    max_rows: 3,
                    max_cols: 3,
                    specs: vec![],
                    max_order,
                    tolerance,
                }
            } else {
                let spec = spec.spec()?;
                MomentsScenario {
                    id: "verify-moments".into(),
                    seed: 0,
                    entries: vec![],
                    max_rows: 3,
                    max_cols: 3,
                    specs: vec![spec.alphas().to_vec()],
                    max_order,
                    tolerance,
                }
            };
            let start = Instant::now();
            let records = scenarios::run_moments(&sc)?;
            for r in &records {
                if let TestRecord::MomentOracle { .. } = r {
                    println!("{}", r.describe());
                }
            }
            let report = VerificationReport::new(&sc.id, "moments", 0, "", records, start.elapsed().as_secs_f64());
            finish(&report, out.as_deref())
        }
        Command::Stieltjes { n, grid, check, out } => {
            let points = match check {
                Check::Equation3 => equation3_residual(n, &grid)?,
                Check::Equation1 => equation1_check(n, &grid)?,
            };
            let worst = points.iter().map(|p| p.residual).fold(0.0f64, f64::max);
            eprintln!("n = {n}: max residual {worst:.3e} over {} points", points.len());
            write_output(out.as_deref(), &scenarios::residual_csv(&points))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
