//! Per-scenario JSON reports.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::FORMAT_VERSION;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Keys that legitimately differ between two runs of the same config.
pub const TIMING_FIELDS: [&str; 1] = ["wall_clock_seconds"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub format_version: u32,
    pub scenario_id: String,
    pub kind: String,
    pub seed: u64,
    pub tool_version: String,
    pub config_hash: String,
    pub pass: bool,
    pub tests: usize,
    pub failures: usize,
    pub records: Vec<TestRecord>,
    pub wall_clock_seconds: f64,
}

impl VerificationReport {
    pub fn new(
        scenario_id: &str,
        kind: &str,
        seed: u64,
        config_hash: &str,
        records: Vec<TestRecord>,
        wall_clock_seconds: f64,
    ) -> Self {
        let failures = records.iter().filter(|r| !r.pass()).count();
        Self {
            format_version: FORMAT_VERSION,
            scenario_id: scenario_id.to_string(),
            kind: kind.to_string(),
            seed,
            tool_version: TOOL_VERSION.to_string(),
            config_hash: config_hash.to_string(),
            // A scenario with no tests proves nothing.
            pass: failures == 0 && !records.is_empty(),
            tests: records.len(),
            failures,
            records,
            wall_clock_seconds,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn failed_records(&self) -> impl Iterator<Item = &TestRecord> {
        self.records.iter().filter(|r| !r.pass())
    }
}

pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "test", rename_all = "snake_case")]
pub enum TestRecord {
    MomentZ {
        fixture: String,
        path: String,
        index: Vec<u32>,
        empirical: f64,
        exact: f64,
        std_error: f64,
        z_score: f64,
        threshold: f64,
        pass: bool,
    },
    Ks {
        fixture: String,
        path: String,
        coordinate: usize,
        statistic: f64,
        threshold: f64,
        level: f64,
        pass: bool,
    },
    Energy {
        fixture: String,
        paths: [String; 2],
        statistic: f64,
        p_value: f64,
        permutations: usize,
        points_per_sample: (usize, usize),
        level: f64,
        pass: bool,
    },
    MomentOracle {
        rows: usize,
        cols: usize,
        specs: usize,
        indices: usize,
        max_rel_error: f64,
        worst_spec: Vec<Vec<f64>>,
        worst_index: Vec<u32>,
        tolerance: f64,
        pass: bool,
    },
    DirmultNormalization {
        dim: usize,
        vectors: usize,
        max_trials: u32,
        max_abs_error: f64,
        worst_alpha: Vec<f64>,
        worst_trials: u32,
        tolerance: f64,
        pass: bool,
    },
    StieltjesResidual {
        check: String,
        n: u32,
        z: f64,
        lhs: f64,
        rhs: f64,
        residual: f64,
        tolerance: f64,
        pass: bool,
    },
    StieltjesNormalization {
        transform: String,
        z_re: f64,
        z_im: f64,
        error: f64,
        bound: f64,
        pass: bool,
    },
    ProductIdentity {
        alpha: Vec<f64>,
        t: Vec<f64>,
        series: f64,
        product: f64,
        truncation_order: u32,
        tail_bound: f64,
        abs_error: f64,
        tolerance: f64,
        pass: bool,
    },
    VariantReading {
        alpha: Vec<f64>,
        symmetric_error: f64,
        asymmetric_error: f64,
        enabled: Option<rwa_core::rwa::VariantReading>,
        tolerance: f64,
        pass: bool,
    },
    /// A numerical routine failed; the scenario cannot be judged a pass.
    Error {
        subject: String,
        message: String,
        pass: bool,
    },
}

impl TestRecord {
    pub fn pass(&self) -> bool {
        match self {
            TestRecord::MomentZ { pass, .. }
            | TestRecord::Ks { pass, .. }
            | TestRecord::Energy { pass, .. }
            | TestRecord::MomentOracle { pass, .. }
            | TestRecord::DirmultNormalization { pass, .. }
            | TestRecord::StieltjesResidual { pass, .. }
            | TestRecord::StieltjesNormalization { pass, .. }
            | TestRecord::ProductIdentity { pass, .. }
            | TestRecord::VariantReading { pass, .. }
            | TestRecord::Error { pass, .. } => *pass,
        }
    }

    pub fn error(subject: impl Into<String>, err: impl std::fmt::Display) -> Self {
        TestRecord::Error {
            subject: subject.into(),
            message: err.to_string(),
            pass: false,
        }
    }

    /// One-line human summary.
    pub fn describe(&self) -> String {
        match self {
            TestRecord::MomentZ { fixture, path, index, z_score, .. } => {
                format!("moment {fixture}/{path} s={index:?}: z = {z_score:.3}")
            }
            TestRecord::Ks { fixture, path, coordinate, statistic, threshold, .. } => {
                format!("ks {fixture}/{path} coordinate {coordinate}: D = {statistic:.5} (threshold {threshold:.5})")
            }
            TestRecord::Energy { fixture, paths, statistic, p_value, .. } => {
                format!("energy {fixture} {} vs {}: E = {statistic:.3e}, p = {p_value:.4}", paths[0], paths[1])
            }
            TestRecord::MomentOracle { rows, cols, specs, max_rel_error, .. } => {
                format!("moment oracle {rows}x{cols} ({specs} specs): max relative error {max_rel_error:.3e}")
            }
            TestRecord::DirmultNormalization { dim, vectors, max_abs_error, .. } => {
                format!("dirichlet-multinomial k={dim} ({vectors} vectors): max |Σp − 1| = {max_abs_error:.3e}")
            }
            TestRecord::StieltjesResidual { check, n, z, residual, .. } => {
                format!("{check} n={n} z={z}: residual {residual:.3e}")
            }
            TestRecord::StieltjesNormalization { transform, z_re, z_im, error, bound, .. } => {
                format!("normalization {transform} z={z_re}{z_im:+}i: |zS − 1| = {error:.3e} (bound {bound:.3e})")
            }
            TestRecord::ProductIdentity { alpha, t, abs_error, .. } => {
                format!("product identity α={alpha:?} t={t:?}: error {abs_error:.3e}")
            }
            TestRecord::VariantReading { alpha, symmetric_error, asymmetric_error, enabled, .. } => format!(
                "variant α={alpha:?}: symmetric {symmetric_error:.3e}, asymmetric {asymmetric_error:.3e}, enabled {enabled:?}"
            ),
            TestRecord::Error { subject, message, .. } => format!("{subject}: {message}"),
        }
    }
}
