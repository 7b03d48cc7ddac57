use std::fmt;
use std::path::Path;

use sdlab::feller::SimParams;
use sdlab::fields::DriftSpec;
use sdlab::regularity::{HolderRegion, RoughInput};
use sdlab::semigroup::{SemigroupParams, UltraOptions};
use sdlab::theta::{NeumannSettings, Representation};
use sdlab::Complex64;
use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

/// Invalid configuration; the message names the offending key.
#[derive(Debug)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Constants,
    EstimateClass,
    Resolvent,
    PseudoResolvent,
    NormBounds,
    ConvergenceStudy,
    Semigroup,
    Ultracontractivity,
    VerifyKernels,
    HolderProbe,
    SmoothingStudy,
    WeakIdentity,
    Simulate,
    Acceptance,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Constants => "constants",
            Experiment::EstimateClass => "estimate-class",
            Experiment::Resolvent => "resolvent",
            Experiment::PseudoResolvent => "pseudo-resolvent",
            Experiment::NormBounds => "norm-bounds",
            Experiment::ConvergenceStudy => "convergence-study",
            Experiment::Semigroup => "semigroup",
            Experiment::Ultracontractivity => "ultracontractivity",
            Experiment::VerifyKernels => "verify-kernels",
            Experiment::HolderProbe => "holder-probe",
            Experiment::SmoothingStudy => "smoothing-study",
            Experiment::WeakIdentity => "weak-identity",
            Experiment::Simulate => "simulate",
            Experiment::Acceptance => "acceptance",
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "L")]
    pub box_length: f64,
}

impl GridConfig {
    /// Grid used when the config has none: big enough for the experiment's
    /// region and time guards.
    pub fn default_for(exp: Option<Experiment>) -> Self {
        match exp {
            Some(Experiment::HolderProbe) => Self { n: 64, box_length: 4.0 },
            Some(Experiment::Ultracontractivity) => Self { n: 16, box_length: 16.0 },
            Some(Experiment::Simulate) => Self { n: 32, box_length: 4.0 },
            _ => Self { n: 16, box_length: 4.0 },
        }
    }
}

/// One flat schema for every experiment; keys an experiment does not use
/// are ignored by it, unknown keys are rejected.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "schema_default")]
    pub schema: u32,
    pub experiment: Option<Experiment>,
    #[serde(default = "d_default")]
    pub d: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "field_default")]
    pub field: DriftSpec,
    /// Mollification width in grid cells; none means the raw field.
    pub mollify_cells: Option<f64>,
    #[serde(default = "p_default")]
    pub p: f64,
    pub q: Option<f64>,
    pub r: Option<f64>,
    /// `[re, im]`; defaults to `κ_d λ`.
    pub zeta: Option<[f64; 2]>,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub grid: Option<GridConfig>,
    #[serde(default = "rep_default")]
    pub representation: Representation,
    #[serde(default)]
    pub neumann: NeumannSettings,

    /// constants
    pub ds: Option<Vec<usize>>,
    pub deltas: Option<Vec<f64>>,
    /// estimate-class
    pub lambdas: Option<Vec<f64>>,
    /// pseudo-resolvent: pairs `[[re, im], [re, im]]` as multiples of `κ_d λ`
    pub zeta_pairs: Option<Vec<[[f64; 2]; 2]>>,
    /// norm-bounds
    pub zetas: Option<Vec<[f64; 2]>>,
    pub restarts: Option<usize>,
    /// convergence-study
    pub levels: Option<Vec<f64>>,
    pub semigroup: Option<SemigroupParams>,
    /// ultracontractivity
    pub t_grid: Option<Vec<f64>>,
    /// `‖e^{-tΛ}‖_{from_p → to_r}`; no `to_r` means `∞`.
    #[serde(default = "one")]
    pub from_p: f64,
    pub to_r: Option<f64>,
    #[serde(default)]
    pub ultra: UltraOptions,
    /// verify-kernels
    pub which: Option<Vec<String>>,
    /// Input `f`; a Gaussian bump when absent.
    pub input: Option<RoughInput>,
    /// holder-probe
    pub holder: Option<HolderRegion>,
    /// smoothing-study
    pub smoothing_levels: Option<Vec<usize>>,
    /// weak-identity
    pub tests: Option<usize>,
    /// simulate
    pub simulation: Option<SimParams>,
    pub starts: Option<Vec<Vec<f64>>>,
    pub payoff_width: Option<f64>,
    pub separations: Option<Vec<f64>>,
    /// acceptance
    #[serde(default)]
    pub flip_sde_sign: bool,
    pub criteria: Option<Vec<usize>>,
}

fn schema_default() -> u32 {
    SCHEMA
}

fn one() -> f64 {
    1.0
}

fn d_default() -> usize {
    3
}

fn field_default() -> DriftSpec {
    DriftSpec::Hardy { c: 0.2 }
}

fn p_default() -> f64 {
    2.5
}

fn rep_default() -> Representation {
    Representation::Rp
}

impl Default for Config {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every key has a default")
    }
}

impl Config {
    pub fn from_str(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let msg = inner.to_string();
            let key = if path == "." {
                unknown_key(&msg).unwrap_or_else(|| "<root>".into())
            } else {
                path
            };
            ConfigError::new(key, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != SCHEMA {
            return Err(ConfigError::new(
                "schema",
                format!("unsupported schema {} (expected {SCHEMA})", self.schema),
            ));
        }
        if !(2..=10).contains(&self.d) {
            return Err(ConfigError::new("d", format!("need 2 ≤ d ≤ 10 (got {})", self.d)));
        }
        if let Some(g) = self.grid {
            if g.n < 4 || g.n % 2 != 0 {
                return Err(ConfigError::new("grid.n", format!("need an even n ≥ 4 (got {})", g.n)));
            }
            if !(g.box_length > 0.0 && g.box_length.is_finite()) {
                return Err(ConfigError::new("grid.L", "box length must be positive"));
            }
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(ConfigError::new("p", format!("need 1 < p < ∞ (got {})", self.p)));
        }
        if let Err(e) = self.field.validate(self.d) {
            return Err(ConfigError::new("field", e.to_string()));
        }
        if let Some(c) = self.mollify_cells {
            if !(c > 0.0) {
                return Err(ConfigError::new("mollify_cells", "must be positive"));
            }
        }
        match (self.delta, self.lambda) {
            (Some(d), _) if !(d >= 0.0) => return Err(ConfigError::new("delta", "must be ≥ 0")),
            (_, Some(l)) if !(l > 0.0) => return Err(ConfigError::new("lambda", "must be positive")),
            (Some(_), None) => return Err(ConfigError::new("lambda", "required when delta is given")),
            (None, Some(_)) => return Err(ConfigError::new("delta", "required when lambda is given")),
            _ => {}
        }
        if let Some(ws) = &self.which {
            for w in ws {
                if !KERNEL_CHECKS.contains(&w.as_str()) {
                    return Err(ConfigError::new(
                        "which",
                        format!("unknown check {w:?} (expected one of {KERNEL_CHECKS:?})"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> GridConfig {
        self.grid.unwrap_or_else(|| GridConfig::default_for(self.experiment))
    }

    pub fn zeta(&self) -> Option<Complex64> {
        self.zeta.map(|[re, im]| Complex64::new(re, im))
    }
}

pub const KERNEL_CHECKS: [&str; 6] = ["A0", "A1", "A2", "A3", "A4", "A5"];

/// Key name from serde's "unknown field `x`" message.
fn unknown_key(msg: &str) -> Option<String> {
    let rest = msg.strip_prefix("unknown field `")?;
    Some(rest[..rest.find('`')?].to_string())
}
