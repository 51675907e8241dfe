//! Flat key-value run configuration. Values come from defaults, then an
//! optional TOML file, then command-line overrides.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use optomech::measurement::OutcomePolicy;
use optomech::optimize::{OptimizerConfig, OptimizerMethod};
use optomech::protocol::{EntangleSchedule, VerifySchedule};
use optomech::sweep::Axis;
use optomech::SystemParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    /// Angular frequencies and times in units where `omega1` sets the scale.
    Dimensionless,
    /// `omega1`, `omega2` in Hz (ordinary frequency); `tau` and delays in seconds.
    Si,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    /// Condition on the mean outcome.
    Marginalize,
    /// Draw outcomes from `seed`.
    Sampled,
}

/// Every key accepted in a config file or through `--set key=value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub units: Units,
    pub omega1: f64,
    pub omega2: f64,
    pub q1: f64,
    pub q2: f64,
    pub n_th1: f64,
    pub n_th2: f64,
    pub chi1: f64,
    pub chi2: f64,

    /// Entangling delay; default `pi / (2 omega1)`.
    pub tau: Option<f64>,
    /// Verification delays; defaults `pi/2`, `pi`, `pi/4` over `omega1`.
    pub d_plus: Option<f64>,
    pub d_minus: Option<f64>,
    pub d_cross: Option<f64>,
    pub readout_imprecision: bool,
    pub outcome: Outcome,
    pub seed: u64,

    pub out: PathBuf,
    pub formats: Vec<Format>,
    /// Worker threads for sweeps; default is the machine parallelism.
    pub workers: Option<usize>,

    pub optimizer: OptimizerMethod,
    pub tolerance: f64,
    pub max_evals: usize,
    pub grid_points: usize,

    /// Wigner snapshot: 0 thermal, 1 first pulse, 2 before second pulse,
    /// 3 after second pulse.
    pub stage: usize,
    pub pair: String,
    pub mean_xplus: Option<f64>,
    pub wigner_points: usize,
    /// Half-width of the Wigner window in standard deviations.
    pub wigner_width: f64,

    // sweep axes; unset values take the per-sweep defaults
    pub chis: Option<Vec<f64>>,
    pub q_min: Option<f64>,
    pub q_max: Option<f64>,
    pub q_points: Option<usize>,
    pub tau_min: Option<f64>,
    pub tau_max: Option<f64>,
    pub tau_points: Option<usize>,
    pub ratio_min: Option<f64>,
    pub ratio_max: Option<f64>,
    pub ratio_points: Option<usize>,
    pub eps_min: Option<f64>,
    pub eps_max: Option<f64>,
    pub eps_points: Option<usize>,
    pub chi1s: Option<Vec<f64>>,
    pub mismatch_min: Option<f64>,
    pub mismatch_max: Option<f64>,
    pub mismatch_points: Option<usize>,
}

impl Default for RunConfig {
    /// `omega2 = 3 omega1`, `chi = 2`, `Q = 1e6`, `n_th1 = 1e4`, `n_th2 = n_th1 / 3`.
    fn default() -> Self {
        let p = SystemParams::default();
        let opt = OptimizerConfig::default();
        Self {
            units: Units::Dimensionless,
            omega1: p.omega1,
            omega2: p.omega2,
            q1: p.q1,
            q2: p.q2,
            n_th1: p.n_th1,
            n_th2: p.n_th2,
            chi1: p.chi1,
            chi2: p.chi2,
            tau: None,
            d_plus: None,
            d_minus: None,
            d_cross: None,
            readout_imprecision: false,
            outcome: Outcome::Marginalize,
            seed: 0,
            out: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
            workers: None,
            optimizer: opt.method,
            tolerance: opt.tolerance,
            max_evals: opt.max_evals,
            grid_points: opt.grid_points,
            stage: 1,
            pair: "X+,P+".into(),
            mean_xplus: None,
            wigner_points: 101,
            wigner_width: 5.0,
            chis: None,
            q_min: None,
            q_max: None,
            q_points: None,
            tau_min: None,
            tau_max: None,
            tau_points: None,
            ratio_min: None,
            ratio_max: None,
            ratio_points: None,
            eps_min: None,
            eps_max: None,
            eps_points: None,
            chi1s: None,
            mismatch_min: None,
            mismatch_max: None,
            mismatch_points: None,
        }
    }
}

fn range(key: &'static str, reason: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.into(),
        reason: reason.into(),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.message().to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// Applies one `key=value` override. The value uses TOML syntax, so
    /// lists are written `chis=[1,2]` and strings may be left unquoted.
    pub fn set(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Parse(format!("expected key=value, got `{assignment}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let mut table = toml::Table::try_from(&*self).map_err(|e| CliError::Parse(e.to_string()))?;
        let parsed = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        table.insert(key.to_string(), parsed);
        *self = table
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Parse(e.message().to_string()))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params()?
            .validate()
            .map_err(|e| match e {
                optomech::Error::InvalidParameter { name, reason } => range(name, reason),
                other => CliError::Core(other),
            })?;
        for (key, v) in [
            ("tau", self.tau),
            ("d_plus", self.d_plus),
            ("d_minus", self.d_minus),
            ("d_cross", self.d_cross),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(range(key, format!("must be finite and >= 0, got {v}")));
                }
            }
        }
        if self.workers == Some(0) {
            return Err(range("workers", "must be >= 1"));
        }
        if self.formats.is_empty() {
            return Err(range("formats", "select at least one of csv, json, svg"));
        }
        if !(self.tolerance > 0.0) {
            return Err(range("tolerance", "must be > 0"));
        }
        if self.grid_points < 2 {
            return Err(range("grid_points", "must be >= 2"));
        }
        if self.stage > 3 {
            return Err(range("stage", format!("must be 0..=3, got {}", self.stage)));
        }
        if self.wigner_points < 2 {
            return Err(range("wigner_points", "must be >= 2"));
        }
        if !(self.wigner_width > 0.0 && self.wigner_width.is_finite()) {
            return Err(range("wigner_width", "must be finite and > 0"));
        }
        if let Some(m) = self.mean_xplus {
            if !m.is_finite() {
                return Err(range("mean_xplus", "must be finite"));
            }
        }
        Ok(())
    }

    /// Physical parameters in dimensionless units.
    pub fn params(&self) -> Result<SystemParams, CliError> {
        let (omega1, omega2) = match self.units {
            Units::Dimensionless => (self.omega1, self.omega2),
            Units::Si => {
                if !(self.omega1 > 0.0) {
                    return Err(range("omega1", "SI frequency must be > 0"));
                }
                (1.0, self.omega2 / self.omega1)
            }
        };
        Ok(SystemParams {
            omega1,
            omega2,
            q1: self.q1,
            q2: self.q2,
            n_th1: self.n_th1,
            n_th2: self.n_th2,
            chi1: self.chi1,
            chi2: self.chi2,
        })
    }

    /// Converts a time to the dimensionless scale (`omega1 t` with `omega1 = 1`
    /// in SI mode, where `t` is in seconds and `omega1` in Hz).
    fn time(&self, t: f64) -> f64 {
        match self.units {
            Units::Dimensionless => t,
            Units::Si => 2.0 * PI * self.omega1 * t,
        }
    }

    pub fn entangle_schedule(&self) -> Result<EntangleSchedule, CliError> {
        let p = self.params()?;
        let tau = self.tau.map_or(FRAC_PI_2 / p.omega1, |t| self.time(t));
        Ok(EntangleSchedule::default().with_tau(tau))
    }

    pub fn verify_schedule(&self) -> Result<VerifySchedule, CliError> {
        let p = self.params()?;
        let d = VerifySchedule::for_params(&p);
        Ok(VerifySchedule {
            d_plus: self.d_plus.map_or(d.d_plus, |t| self.time(t)),
            d_minus: self.d_minus.map_or(d.d_minus, |t| self.time(t)),
            d_cross: self.d_cross.map_or(d.d_cross, |t| self.time(t)),
            include_readout_imprecision: self.readout_imprecision,
        })
    }

    pub fn outcomes(&self) -> [OutcomePolicy; 2] {
        match self.outcome {
            Outcome::Marginalize => [OutcomePolicy::Marginalize; 2],
            Outcome::Sampled => [
                OutcomePolicy::Sampled(self.seed),
                OutcomePolicy::Sampled(self.seed.wrapping_add(1)),
            ],
        }
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        OptimizerConfig {
            method: self.optimizer,
            tolerance: self.tolerance,
            max_evals: self.max_evals,
            grid_points: self.grid_points,
            bounds: None,
        }
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    pub fn linear_axis(
        &self,
        name: &str,
        bounds: (Option<f64>, Option<f64>, Option<usize>),
        default: (f64, f64, usize),
    ) -> Axis {
        Axis::linear(
            name,
            bounds.0.unwrap_or(default.0),
            bounds.1.unwrap_or(default.1),
            bounds.2.unwrap_or(default.2),
        )
    }
}
