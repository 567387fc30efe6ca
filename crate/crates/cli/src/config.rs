//! Scenario configuration: a single JSON document with a schemaVersion,
//! strict about unknown keys so typos fail loudly instead of silently
//! running defaults.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<FrequencyConfig>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProblemConfig {
    pub s: f64,
    pub half_width: f64,
    pub n: usize,
    pub obstacle: ObstacleConfig,
    #[serde(default)]
    pub b: CoeffProfile,
    #[serde(default = "CoeffProfile::unit")]
    pub c: CoeffProfile,
}

/// Obstacle catalog. `bump` takes optional shape parameters; the others
/// are fixed reference shapes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObstacleConfig {
    Bump {
        #[serde(default)]
        center: f64,
        #[serde(default = "default_bump_width")]
        width: f64,
        #[serde(default = "default_bump_amp")]
        amp: f64,
    },
    ShiftedBump,
    TwoBumps,
    Negative,
}

fn default_bump_width() -> f64 {
    2.0
}

fn default_bump_amp() -> f64 {
    1.0
}

/// Coefficient profiles for the drift b and the zero-order term c.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoeffProfile {
    Zero,
    Constant { value: f64 },
    /// amp * sin(x); usable as a drift, not as a zero-order term.
    Sine { amp: f64 },
}

impl Default for CoeffProfile {
    fn default() -> Self {
        CoeffProfile::Zero
    }
}

impl CoeffProfile {
    fn unit() -> Self {
        CoeffProfile::Constant { value: 1.0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            CoeffProfile::Zero => 0.0,
            CoeffProfile::Constant { value } => value,
            CoeffProfile::Sine { amp } => amp * x.sin(),
        }
    }

    pub fn lower_bound(&self) -> f64 {
        match *self {
            CoeffProfile::Zero => 0.0,
            CoeffProfile::Constant { value } => value,
            CoeffProfile::Sine { amp } => -amp.abs(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_schedule")]
    pub eps_schedule: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_true")]
    pub polish: bool,
    /// Stop the ε-continuation at the (shallow) end of epsSchedule and
    /// settle contact by policy iteration instead of deepening ε.  Needed
    /// when c is small: the penalized fixed point contracts like ε·c.
    #[serde(default)]
    pub seeded: bool,
}

fn default_schedule() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}

fn default_tol() -> f64 {
    1e-9
}

fn default_true() -> bool {
    true
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_schedule: default_schedule(),
            tol: default_tol(),
            polish: true,
            seeded: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    /// Probe points; omitted means a standard spread around the contact
    /// set (its middle, its right edge, two points beyond, one before).
    /// Probes snap to the nearest grid node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<f64>>,
    /// Paths per alternative stopping rule in the suboptimality sweep.
    #[serde(default = "default_alt_paths")]
    pub alt_paths: usize,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_horizon() -> f64 {
    10.0
}

fn default_n_paths() -> usize {
    100_000
}

fn default_alt_paths() -> usize {
    20_000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FrequencyConfig {
    /// Defaults to s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Defaults to (3s - 1)/2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "default_ladder")]
    pub ladder: f64,
    /// Defaults to 2.5 h.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    /// Half-plane extension height.
    #[serde(default = "default_extent")]
    pub extent: f64,
    /// Half-plane extension rows.
    #[serde(default = "default_rows")]
    pub rows: usize,
    #[serde(default)]
    pub growth: bool,
    #[serde(default)]
    pub boundary_mean: bool,
}

fn default_ladder() -> f64 {
    0.9
}

fn default_r_max() -> f64 {
    1.0
}

fn default_extent() -> f64 {
    2.0
}

fn default_rows() -> usize {
    24
}

/// Errors before any run directory exists: bad usage, unreadable or
/// invalid configuration. These all exit with code 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl ScenarioConfig {
    /// Load and validate. `path` may be a config file or a run directory
    /// holding the canonical config.json of an earlier run.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let file = if path.is_dir() {
            path.join("config.json")
        } else {
            path.to_path_buf()
        };
        let text = fs::read_to_string(&file)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", file.display())))?;
        let config: ScenarioConfig = serde_json::from_str(&text)
            .map_err(|e| ConfigError(format!("{}: {e}", file.display())))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError(format!(
                "schemaVersion {} not supported (this build understands {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(ConfigError(format!(
                "scenario name '{}' must be nonempty and [A-Za-z0-9_-] (it names the run directory)",
                self.name
            )));
        }
        if self.problem.c.lower_bound() <= 0.0 {
            return Err(ConfigError(
                "zero-order profile c must be bounded below by a positive constant".into(),
            ));
        }
        Ok(())
    }

    /// Canonical serialized form: the parsed document re-emitted with all
    /// defaults materialized. Reloading this text reproduces it verbatim.
    pub fn canonical(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        text
    }

    /// First 8 hex digits of the canonical form's SHA-256; names the run
    /// directory, so identical configs land in the same place.
    pub fn hash8(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest[..4].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn run_dir_name(&self) -> String {
        format!("{}-{}", self.name, self.hash8())
    }
}
