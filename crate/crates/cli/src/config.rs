//! Experiment configuration: strict JSON, one descriptor per scenario.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rwa_core::{DirichletParams, RwaSpec, SamplingPath};
use serde::de::{self, value::MapAccessDeserializer, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::CliError;
use crate::fixtures;

/// The only report and config schema understood by this build.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub format_version: u32,
    pub output_dir: PathBuf,
    pub scenarios: Vec<Scenario>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    Theorem(TheoremScenario),
    Moments(MomentsScenario),
    Dirmult(DirmultScenario),
    Stieltjes(StieltjesScenario),
    KerovTsilevich(KerovTsilevichScenario),
    Variant(VariantScenario),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ScenarioKind {
    Theorem,
    Moments,
    Dirmult,
    Stieltjes,
    KerovTsilevich,
    Variant,
}

fn scenario_by_kind<'de, D: Deserializer<'de>>(kind: ScenarioKind, d: D) -> Result<Scenario, D::Error> {
    Ok(match kind {
        ScenarioKind::Theorem => Scenario::Theorem(TheoremScenario::deserialize(d)?),
        ScenarioKind::Moments => Scenario::Moments(MomentsScenario::deserialize(d)?),
        ScenarioKind::Dirmult => Scenario::Dirmult(DirmultScenario::deserialize(d)?),
        ScenarioKind::Stieltjes => Scenario::Stieltjes(StieltjesScenario::deserialize(d)?),
        ScenarioKind::KerovTsilevich => Scenario::KerovTsilevich(KerovTsilevichScenario::deserialize(d)?),
        ScenarioKind::Variant => Scenario::Variant(VariantScenario::deserialize(d)?),
    })
}

/// Tagged by `kind`. When `kind` is the first key the rest of the object is read
/// in place, so errors point at the offending line rather than the object's end.
impl<'de> Deserialize<'de> for Scenario {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct ScenarioVisitor;

        impl<'de> Visitor<'de> for ScenarioVisitor {
            type Value = Scenario;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a scenario object with a `kind` field")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Scenario, A::Error> {
                let Some(first) = map.next_key::<String>()? else {
                    return Err(de::Error::missing_field("kind"));
                };
                if first == "kind" {
                    let kind: ScenarioKind = map.next_value()?;
                    return scenario_by_kind(kind, MapAccessDeserializer::new(map));
                }
                let mut object = serde_json::Map::new();
                object.insert(first, map.next_value()?);
                while let Some((k, v)) = map.next_entry::<String, serde_json::Value>()? {
                    object.insert(k, v);
                }
                let kind = object.remove("kind").ok_or_else(|| de::Error::missing_field("kind"))?;
                let kind = ScenarioKind::deserialize(kind).map_err(de::Error::custom)?;
                scenario_by_kind(kind, serde_json::Value::Object(object)).map_err(de::Error::custom)
            }
        }

        d.deserialize_map(ScenarioVisitor)
    }
}

/// Monte Carlo check of the weighted-average law on a list of fixtures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremScenario {
    pub id: String,
    pub seed: u64,
    pub fixtures: Vec<FixtureConfig>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Every path is tested against the target; the first is also compared
    /// with each of the others by the energy test.
    #[serde(default = "default_paths")]
    pub paths: Vec<SamplingPath>,
    #[serde(default = "default_theorem_order")]
    pub max_order: u32,
    #[serde(default = "default_z_threshold")]
    pub z_threshold: f64,
    #[serde(default = "default_level")]
    pub ks_level: f64,
    #[serde(default)]
    pub energy: EnergyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureConfig {
    pub name: String,
    /// `n × k` parameter matrix. Omit to use the built-in fixture of that name.
    #[serde(default)]
    pub alphas: Option<Vec<Vec<f64>>>,
    /// Replaces the column sums as the hypothesized law of `z`.
    #[serde(default)]
    pub target: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_max_per_sample")]
    pub max_per_sample: usize,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            permutations: default_permutations(),
            level: default_level(),
            max_per_sample: default_max_per_sample(),
        }
    }
}

/// Exact expansion against closed form over a grid of parameter matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsScenario {
    pub id: String,
    pub seed: u64,
    /// Candidate matrix entries; every `n × k` matrix over them is checked.
    #[serde(default)]
    pub entries: Vec<f64>,
    #[serde(default = "default_grid_dim")]
    pub max_rows: usize,
    #[serde(default = "default_grid_dim")]
    pub max_cols: usize,
    /// Additional matrices checked one by one.
    #[serde(default)]
    pub specs: Vec<Vec<Vec<f64>>>,
    #[serde(default = "default_moment_order")]
    pub max_order: u32,
    #[serde(default = "default_moment_tolerance")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirmultScenario {
    pub id: String,
    pub seed: u64,
    pub entries: Vec<f64>,
    pub max_dim: usize,
    pub max_trials: u32,
    #[serde(default = "default_dirmult_tolerance")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StieltjesScenario {
    pub id: String,
    pub seed: u64,
    pub grid: Vec<f64>,
    pub orders: Vec<OrderTolerance>,
    #[serde(default)]
    pub normalization_radii: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderTolerance {
    pub n: u32,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KerovTsilevichScenario {
    pub id: String,
    pub seed: u64,
    pub alphas: Vec<Vec<f64>>,
    /// Each `t` is a point of the cartesian power of this grid.
    pub t_grid: Vec<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantScenario {
    pub id: String,
    pub seed: u64,
    pub alphas: Vec<Vec<f64>>,
    #[serde(default = "default_moment_order")]
    pub max_order: u32,
    #[serde(default = "default_moment_tolerance")]
    pub tolerance: f64,
    /// Monte Carlo draws per weight vector for the enabled reading; 0 skips them.
    #[serde(default)]
    pub samples: usize,
}

fn default_samples() -> usize {
    200_000
}
fn default_paths() -> Vec<SamplingPath> {
    vec![SamplingPath::Direct, SamplingPath::GammaPath]
}
fn default_theorem_order() -> u32 {
    3
}
fn default_z_threshold() -> f64 {
    rwa_core::stattest::DEFAULT_Z_THRESHOLD
}
fn default_level() -> f64 {
    rwa_core::stattest::DEFAULT_KS_LEVEL
}
fn default_permutations() -> usize {
    rwa_core::stattest::EnergyOptions::default().permutations
}
fn default_max_per_sample() -> usize {
    rwa_core::stattest::EnergyOptions::default().max_per_sample
}
fn default_grid_dim() -> usize {
    3
}
fn default_moment_order() -> u32 {
    5
}
fn default_moment_tolerance() -> f64 {
    1e-9
}
fn default_dirmult_tolerance() -> f64 {
    1e-10
}

impl Scenario {
    pub fn id(&self) -> &str {
        match self {
            Scenario::Theorem(s) => &s.id,
            Scenario::Moments(s) => &s.id,
            Scenario::Dirmult(s) => &s.id,
            Scenario::Stieltjes(s) => &s.id,
            Scenario::KerovTsilevich(s) => &s.id,
            Scenario::Variant(s) => &s.id,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Scenario::Theorem(s) => s.seed,
            Scenario::Moments(s) => s.seed,
            Scenario::Dirmult(s) => s.seed,
            Scenario::Stieltjes(s) => s.seed,
            Scenario::KerovTsilevich(s) => s.seed,
            Scenario::Variant(s) => s.seed,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::Theorem(_) => "theorem",
            Scenario::Moments(_) => "moments",
            Scenario::Dirmult(_) => "dirmult",
            Scenario::Stieltjes(_) => "stieltjes",
            Scenario::KerovTsilevich(_) => "kerov_tsilevich",
            Scenario::Variant(_) => "variant",
        }
    }
}

impl FixtureConfig {
    /// The parameter matrix, explicit or looked up by name.
    pub fn spec(&self) -> Result<RwaSpec, CliError> {
        match &self.alphas {
            Some(rows) => Ok(RwaSpec::new(rows.clone())?),
            None => fixtures::named(&self.name)
                .ok_or_else(|| CliError::Invalid(format!("unknown fixture '{}' and no alphas given", self.name))),
        }
    }

    pub fn target(&self, spec: &RwaSpec) -> Result<DirichletParams, CliError> {
        match &self.target {
            None => Ok(rwa_core::target_params(spec)),
            Some(t) if t.len() != spec.k() => Err(CliError::Invalid(format!(
                "fixture '{}': target has {} entries, spec has k = {}",
                self.name,
                t.len(),
                spec.k()
            ))),
            Some(t) => Ok(DirichletParams::new(t.clone())?),
        }
    }
}

impl ExperimentConfig {
    /// Reads and parses `path`; syntax and schema errors carry line and column.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = std::fs::read(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config = Self::parse(&bytes).map_err(|e| match e {
            CliError::Parse {
                line, column, message, ..
            } => CliError::Parse {
                path: path.to_path_buf(),
                line,
                column,
                message,
            },
            other => other,
        })?;
        Ok((config, bytes))
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, CliError> {
        let config: Self = serde_json::from_slice(bytes).map_err(|e| CliError::Parse {
            path: PathBuf::new(),
            line: e.line(),
            column: e.column(),
            message: strip_position(&e.to_string()),
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Semantic checks that need the whole config; runs before any scenario starts.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.format_version != FORMAT_VERSION {
            return Err(CliError::Invalid(format!(
                "format_version {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.scenarios.is_empty() {
            return Err(CliError::Invalid("no scenarios".into()));
        }
        let mut seen = HashSet::new();
        for scenario in &self.scenarios {
            let id = scenario.id();
            if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                return Err(CliError::Invalid(format!(
                    "scenario id '{id}' must be non-empty and use only letters, digits, '-' and '_'"
                )));
            }
            if !seen.insert(id) {
                return Err(CliError::Invalid(format!("duplicate scenario id '{id}'")));
            }
            scenario
                .validate()
                .map_err(|e| CliError::Invalid(format!("scenario '{id}': {e}")))?;
        }
        Ok(())
    }
}

fn check_positive(name: &str, values: &[f64]) -> Result<(), CliError> {
    match values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        Some(v) => Err(CliError::Invalid(format!(
            "{name} must be positive and finite, got {v}"
        ))),
        None => Ok(()),
    }
}

fn check_probability(name: &str, level: f64) -> Result<(), CliError> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(CliError::Invalid(format!("{name} must lie in (0, 1), got {level}")))
    }
}

impl Scenario {
    fn validate(&self) -> Result<(), CliError> {
        match self {
            Scenario::Theorem(s) => {
                if s.fixtures.is_empty() || s.paths.is_empty() {
                    return Err(CliError::Invalid("needs at least one fixture and one path".into()));
                }
                if s.samples < 2 {
                    return Err(CliError::Invalid(format!(
                        "samples must be at least 2, got {}",
                        s.samples
                    )));
                }
                check_positive("z_threshold", &[s.z_threshold])?;
                check_probability("ks_level", s.ks_level)?;
                check_probability("energy.level", s.energy.level)?;
                if s.energy.permutations == 0 || s.energy.max_per_sample < 2 {
                    return Err(CliError::Invalid(
                        "energy test needs permutations ≥ 1 and max_per_sample ≥ 2".into(),
                    ));
                }
                for f in &s.fixtures {
                    let spec = f
                        .spec()
                        .map_err(|e| CliError::Invalid(format!("fixture '{}': {e}", f.name)))?;
                    f.target(&spec)?;
                }
            }
            Scenario::Moments(s) => {
                check_positive("entries", &s.entries)?;
                if s.entries.is_empty() && s.specs.is_empty() {
                    return Err(CliError::Invalid("needs entries or specs".into()));
                }
                if !s.entries.is_empty() && (s.max_rows < 2 || s.max_cols < 2) {
                    return Err(CliError::Invalid("max_rows and max_cols must be at least 2".into()));
                }
                for rows in &s.specs {
                    RwaSpec::new(rows.clone())?;
                }
                check_positive("tolerance", &[s.tolerance])?;
            }
            Scenario::Dirmult(s) => {
                check_positive("entries", &s.entries)?;
                if s.entries.is_empty() || s.max_dim < 2 {
                    return Err(CliError::Invalid("needs entries and max_dim ≥ 2".into()));
                }
                if s.max_trials > rwa_core::moments::DIRMULT_ENUMERATION_CAP {
                    return Err(CliError::Invalid(format!(
                        "max_trials {} exceeds the enumeration cap {}",
                        s.max_trials,
                        rwa_core::moments::DIRMULT_ENUMERATION_CAP
                    )));
                }
                check_positive("tolerance", &[s.tolerance])?;
            }
            Scenario::Stieltjes(s) => {
                if s.grid.is_empty() || s.orders.is_empty() {
                    return Err(CliError::Invalid("needs a grid and at least one order".into()));
                }
                let standoff = 1.0 + rwa_core::stieltjes::SUPPORT_STANDOFF;
                if let Some(z) = s.grid.iter().find(|&&z| !(z >= standoff && z.is_finite())) {
                    return Err(CliError::Invalid(format!("grid point {z} must be at least {standoff}")));
                }
                for o in &s.orders {
                    if o.n < 2 {
                        return Err(CliError::Invalid(format!("order n must be at least 2, got {}", o.n)));
                    }
                    check_positive("tolerance", &[o.tolerance])?;
                }
                if let Some(r) = s
                    .normalization_radii
                    .iter()
                    .find(|&&r| !(r > 1.0 + 1e-9 && r.is_finite()))
                {
                    return Err(CliError::Invalid(format!("normalization radius {r} must exceed 1")));
                }
            }
            Scenario::KerovTsilevich(s) => {
                if s.alphas.is_empty() || s.t_grid.is_empty() {
                    return Err(CliError::Invalid("needs alphas and a t grid".into()));
                }
                for a in &s.alphas {
                    DirichletParams::new(a.clone())?;
                }
                if let Some(t) = s.t_grid.iter().find(|t| !(t.abs() < 1.0)) {
                    return Err(CliError::Invalid(format!("t grid value {t} must satisfy |t| < 1")));
                }
                check_positive("tolerance", &[s.tolerance])?;
            }
            Scenario::Variant(s) => {
                if s.alphas.is_empty() {
                    return Err(CliError::Invalid("needs at least one weight vector".into()));
                }
                for a in &s.alphas {
                    rwa_core::rwa::variant_spec(a, 2, rwa_core::rwa::VariantReading::Symmetric)?;
                }
                check_positive("tolerance", &[s.tolerance])?;
            }
        }
        Ok(())
    }
}

/// serde_json appends " at line L column C"; the position is reported separately.
fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
  "format_version": 1,
  "output_dir": "out",
  "scenarios": [
    {"kind": "dirmult", "id": "dm", "seed": 1, "entries": [1.0], "max_dim": 2, "max_trials": 3}
  ]
}"#;

    #[test]
    fn minimal_config_parses() {
        let c = ExperimentConfig::parse(MINIMAL.as_bytes()).unwrap();
        assert_eq!(c.scenarios.len(), 1);
        assert_eq!(c.scenarios[0].kind(), "dirmult");
        assert_eq!(c.scenarios[0].seed(), 1);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let bad = MINIMAL.replace("\"max_trials\": 3", "\"max_trails\": 3");
        match ExperimentConfig::parse(bad.as_bytes()) {
            Err(CliError::Parse { line, message, .. }) => {
                assert_eq!(line, 5, "{message}");
                assert!(message.contains("max_trails"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let bad = MINIMAL.replace("\"output_dir\"", "\"outdir\"");
        assert!(matches!(
            ExperimentConfig::parse(bad.as_bytes()),
            Err(CliError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn kind_need_not_come_first() {
        let moved = MINIMAL.replace(
            "{\"kind\": \"dirmult\", \"id\": \"dm\",",
            "{\"id\": \"dm\", \"kind\": \"dirmult\",",
        );
        assert_ne!(moved, MINIMAL);
        assert_eq!(
            ExperimentConfig::parse(moved.as_bytes()).unwrap(),
            ExperimentConfig::parse(MINIMAL.as_bytes()).unwrap()
        );
        let bad = moved.replace("\"max_trials\": 3", "\"max_trails\": 3");
        assert!(matches!(
            ExperimentConfig::parse(bad.as_bytes()),
            Err(CliError::Parse { .. })
        ));
        let unknown = MINIMAL.replace("\"dirmult\"", "\"dirmul\"");
        assert!(matches!(
            ExperimentConfig::parse(unknown.as_bytes()),
            Err(CliError::Parse { line: 5, .. })
        ));
    }

    #[test]
    fn seeds_are_mandatory() {
        let bad = MINIMAL.replace("\"seed\": 1, ", "");
        match ExperimentConfig::parse(bad.as_bytes()) {
            Err(CliError::Parse { message, .. }) => assert!(message.contains("seed"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        let bad = MINIMAL.replace("\"output_dir\": \"out\",", "\"output_dir\": \"out\"");
        assert!(matches!(
            ExperimentConfig::parse(bad.as_bytes()),
            Err(CliError::Parse { line: 4, .. })
        ));
    }

    #[test]
    fn semantic_errors() {
        let neg = r#"{"format_version": 1, "output_dir": "o", "scenarios": [
            {"kind": "theorem", "id": "t", "seed": 3, "fixtures": [{"name": "x", "alphas": [[1, -2], [1, 1]]}]}]}"#;
        assert!(matches!(
            ExperimentConfig::parse(neg.as_bytes()),
            Err(CliError::Invalid(_))
        ));
        let version = MINIMAL.replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(
            ExperimentConfig::parse(version.as_bytes()),
            Err(CliError::Invalid(_))
        ));
        let dup = MINIMAL.replace(
            "\"max_trials\": 3}",
            "\"max_trials\": 3},\n{\"kind\": \"dirmult\", \"id\": \"dm\", \"seed\": 1, \"entries\": [1.0], \"max_dim\": 2, \"max_trials\": 3}",
        );
        assert!(
            matches!(ExperimentConfig::parse(dup.as_bytes()), Err(CliError::Invalid(m)) if m.contains("duplicate"))
        );
        let target = r#"{"format_version": 1, "output_dir": "o", "scenarios": [
            {"kind": "theorem", "id": "t", "seed": 3, "fixtures": [{"name": "asymmetric", "target": [1, 2]}]}]}"#;
        assert!(matches!(
            ExperimentConfig::parse(target.as_bytes()),
            Err(CliError::Invalid(_))
        ));
    }

    #[test]
    fn theorem_defaults() {
        let c = r#"{"format_version": 1, "output_dir": "o", "scenarios": [
            {"kind": "theorem", "id": "t", "seed": 3, "fixtures": [{"name": "van-assche"}]}]}"#;
        let c = ExperimentConfig::parse(c.as_bytes()).unwrap();
        let Scenario::Theorem(t) = &c.scenarios[0] else {
            panic!()
        };
        assert_eq!(t.samples, 200_000);
        assert_eq!(t.paths, vec![SamplingPath::Direct, SamplingPath::GammaPath]);
        assert_eq!(t.max_order, 3);
        assert_eq!(t.energy.permutations, 1999);
    }
}
