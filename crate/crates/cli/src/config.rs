use std::fmt;
use std::path::{Path, PathBuf};

use mcl_core::domain::{ChordalModuli, Moduli};
use mcl_core::field::FieldConfig;
use mcl_core::fixtures;
use mcl_core::loewner::FlowConfig;
use mcl_core::sle::{DriftSpec, SdeConfig};
use serde::{Deserialize, Serialize};

pub const VERSION: u32 = 1;

/// A configuration problem, anchored to a line of the config file when one is known.
#[derive(Debug)]
pub struct ConfigError {
    pub file: Option<PathBuf>,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            file: None,
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{}:", file.display())?;
        }
        if let Some(line) = self.line {
            write!(f, "{line}:")?;
            if let Some(col) = self.column {
                write!(f, "{col}:")?;
            }
        }
        if self.file.is_some() || self.line.is_some() {
            write!(f, " ")?;
        }
        write!(f, "{}", self.message)
    }
}

/// The domain as a fixture name or as inline moduli.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainSpec {
    Fixture(String),
    Moduli(Moduli),
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec::Fixture("h".into())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub accuracy: f64,
    pub dt: f64,
    pub swallow_radius: f64,
    pub tip_lift: f64,
    /// Capacity spacing of trace samples; `0` samples every driver step.
    pub trace_dt: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let flow = FlowConfig::default();
        Self {
            accuracy: FieldConfig::default().accuracy,
            dt: 0.01,
            swallow_radius: flow.swallow_radius,
            tip_lift: flow.tip_lift,
            trace_dt: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdeSettings {
    pub kappa: f64,
    pub drift: DriftSpec,
    /// Inclusive seed range `a..b`, or a single seed.
    pub seeds: String,
    pub horizon: f64,
}

impl Default for SdeSettings {
    fn default() -> Self {
        Self {
            kappa: 6.0,
            drift: DriftSpec::Locality,
            seeds: "0..0".into(),
            horizon: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub domain: DomainSpec,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub sde: Option<SdeSettings>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: VERSION,
            domain: DomainSpec::default(),
            solver: SolverSettings::default(),
            sde: None,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            file: Some(path.to_path_buf()),
            ..ConfigError::new(format!("cannot read config: {e}"))
        })?;
        Self::parse(&text).map_err(|e| ConfigError {
            file: Some(path.to_path_buf()),
            ..e
        })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError {
            file: None,
            line: Some(e.line()),
            column: Some(e.column()),
            message: e
                .to_string()
                .split(" at line ")
                .next()
                .unwrap_or_default()
                .to_string(),
        })?;
        cfg.validate().map_err(|(key, message)| ConfigError {
            line: key_line(text, key),
            ..ConfigError::new(message)
        })?;
        Ok(cfg)
    }

    /// Range checks; on failure returns the offending key and a message.
    fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.version != VERSION {
            return Err((
                "version",
                format!(
                    "unsupported config version {} (expected {VERSION})",
                    self.version
                ),
            ));
        }
        let m = self.moduli().map_err(|e| ("domain", e))?;
        let bad: Vec<String> = match &m {
            Moduli::Chordal(c) => c.validate().iter().map(ToString::to_string).collect(),
            Moduli::Bilateral(b) => b.validate().iter().map(ToString::to_string).collect(),
        };
        if !bad.is_empty() {
            return Err((
                "domain",
                format!("domain is not a standard domain: {}", bad.join("; ")),
            ));
        }
        let s = &self.solver;
        if !(1e-12..=1e-2).contains(&s.accuracy) {
            return Err((
                "accuracy",
                format!("accuracy {} outside [1e-12, 1e-2]", s.accuracy),
            ));
        }
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            return Err(("dt", format!("dt {} must be positive", s.dt)));
        }
        if !(s.swallow_radius > 0.0 && s.swallow_radius < 0.5) {
            return Err((
                "swallow_radius",
                format!("swallow_radius {} outside (0, 0.5)", s.swallow_radius),
            ));
        }
        if !(s.tip_lift > 0.0 && s.tip_lift < 1.0) {
            return Err((
                "tip_lift",
                format!("tip_lift {} outside (0, 1)", s.tip_lift),
            ));
        }
        if !(s.trace_dt >= 0.0 && s.trace_dt.is_finite()) {
            return Err((
                "trace_dt",
                format!("trace_dt {} must be non-negative", s.trace_dt),
            ));
        }
        if let Some(sde) = &self.sde {
            if !(sde.kappa >= 0.0 && sde.kappa.is_finite()) {
                return Err(("kappa", format!("kappa {} must be non-negative", sde.kappa)));
            }
            if !(sde.horizon > 0.0 && sde.horizon.is_finite()) {
                return Err((
                    "horizon",
                    format!("horizon {} must be positive", sde.horizon),
                ));
            }
            parse_seeds(&sde.seeds).map_err(|e| ("seeds", e))?;
        }
        Ok(())
    }

    pub fn moduli(&self) -> Result<Moduli, String> {
        match &self.domain {
            DomainSpec::Fixture(name) => fixtures::by_name(name)
                .ok_or_else(|| format!("unknown fixture '{name}' (expected h, m1, m2, b1 or b2)")),
            DomainSpec::Moduli(m) => Ok(m.clone()),
        }
    }

    pub fn chordal(&self) -> Result<ChordalModuli, ConfigError> {
        match self.moduli().map_err(ConfigError::new)? {
            Moduli::Chordal(m) => Ok(m),
            Moduli::Bilateral(_) => Err(ConfigError::new("this command needs a chordal domain")),
        }
    }

    pub fn field(&self) -> FieldConfig {
        FieldConfig::with_accuracy(self.solver.accuracy)
    }

    pub fn flow(&self) -> FlowConfig {
        FlowConfig {
            field: self.field(),
            swallow_radius: self.solver.swallow_radius,
            tip_lift: self.solver.tip_lift,
            ..FlowConfig::default()
        }
    }

    pub fn sde(&self) -> Result<&SdeSettings, ConfigError> {
        self.sde
            .as_ref()
            .ok_or_else(|| ConfigError::new("config has no \"sde\" section"))
    }

    pub fn sde_config(&self, seed: u64) -> Result<SdeConfig, ConfigError> {
        let s = self.sde()?;
        let mut c = SdeConfig::new(s.kappa, self.solver.dt, seed, s.horizon);
        c.field = self.field();
        Ok(c)
    }
}

/// Line of the first occurrence of `"key"` in the raw config text.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&quoted))
        .map(|i| i + 1)
}

/// Expands `a..b` (inclusive), `a..=b` or a single seed.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let bad = || format!("seed range '{s}' is not of the form a..b");
    let s = s.trim();
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
        None => (s, s),
    };
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if b < a {
        return Err(format!("seed range '{s}' is empty"));
    }
    Ok((a..=b).collect())
}
