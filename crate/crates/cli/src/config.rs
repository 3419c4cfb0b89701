//! Run configuration: JSON file plus flag overrides, and artifact headers.

use std::path::Path;

use ambigame::simulator::SimConfig;
use ambigame::{Alpha, Money, Treatment, UtilityFn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Raw,
    #[default]
    Paper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub rho_min: f64,
    pub rho_max: f64,
    pub samples: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let (rho_min, rho_max) = ambigame::solver::DEFAULT_RHO_RANGE;
        SweepConfig { rho_min, rho_max, samples: ambigame::solver::DEFAULT_RHO_SAMPLES }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub input: Option<String>,
    /// `[from, to]` column renames applied when reading the input.
    pub rename: Vec<(String, String)>,
    pub permutations: usize,
    /// Contribution treated as the top of the scale in dispersion reports.
    pub max_contribution: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { input: None, rename: Vec::new(), permutations: 999, max_contribution: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerConfig {
    pub arms: usize,
    /// Total subjects; split evenly unless `n_per_arm` is set.
    pub n_subjects: usize,
    pub n_per_arm: Option<usize>,
    pub sd: f64,
    pub level: f64,
    pub power: f64,
    pub mc_replications: usize,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            arms: 4,
            n_subjects: 1500,
            n_per_arm: None,
            sd: 1.39,
            level: 0.05,
            power: 0.80,
            mc_replications: 0,
        }
    }
}

impl PowerConfig {
    pub fn per_arm(&self) -> usize {
        self.n_per_arm.unwrap_or(self.n_subjects / self.arms.max(1))
    }
}

/// Everything that determines a command's output, except where it is written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub scenarios: Vec<Treatment>,
    pub alpha: Alpha,
    pub utility: UtilityFn,
    pub grid_step: Money,
    pub mode: Mode,
    pub all_profiles: bool,
    pub profile_cap: u64,
    pub sweep: SweepConfig,
    pub simulation: SimConfig,
    pub analysis: AnalysisConfig,
    pub power: PowerConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            scenarios: Treatment::TABLE_ORDER.to_vec(),
            alpha: Alpha::MAXMIN,
            utility: UtilityFn::risk_neutral(),
            grid_step: Money::from_euros(1),
            mode: Mode::Paper,
            all_profiles: false,
            profile_cap: ambigame::solver::DEFAULT_PROFILE_CAP as u64,
            sweep: SweepConfig::default(),
            simulation: SimConfig::default(),
            analysis: AnalysisConfig::default(),
            power: PowerConfig::default(),
        }
    }
}

const CONFIG_PREFIX: &str = "# config: ";

impl RunConfig {
    /// Reads a JSON config, or the embedded config of an artifact written
    /// by this tool.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let json = match text.lines().find_map(|l| l.strip_prefix(CONFIG_PREFIX)) {
            Some(embedded) => embedded.to_string(),
            None => text,
        };
        serde_json::from_str(&json)
            .map_err(|e| CliError::Config(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column())))
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    /// Comment lines placed at the top of every artifact.
    pub fn header(&self, command: &str, extra: &[(String, String)]) -> Vec<String> {
        let mut lines = vec![
            format!("ambigame {}", env!("CARGO_PKG_VERSION")),
            format!("command: {command}"),
            format!("seed: {}", self.seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into())),
            format!("config_sha256: {}", self.sha256()),
        ];
        lines.extend(extra.iter().map(|(k, v)| format!("{k}: {v}")));
        lines.push(format!("config: {}", self.canonical_json()));
        lines
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Prefixes each header line with `# ` and appends the body.
pub fn with_header(header: &[String], body: &str) -> String {
    let mut out = String::new();
    for line in header {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(body);
    out
}
