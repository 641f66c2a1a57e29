//! Line-oriented `key = value` configuration.
//!
//! ```text
//! # reference set, Hill exponent 4
//! model.n = 4
//! tau = 20
//! sweep.param = n
//! sweep.values = 2, 4, 163, 164
//! sim.t_end = 5000
//! output.dir = out
//! ```
//!
//! Keys are applied on top of a base configuration (defaults or a preset).
//! Unknown and repeated keys are rejected.

use std::collections::HashSet;
use std::path::PathBuf;

use thiserror::Error;

use crate::model::ModelParams;
use crate::normal_form::FormulaReadings;
use crate::simulation::DEFAULT_PERTURBATION;
use crate::stability::DEFAULT_K_MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for `{key}`: {reason}")]
    BadValue { line: usize, key: String, value: String, reason: String },
    #[error("{0}")]
    Invalid(String),
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    A1,
    A2,
    A12,
    A21,
    B1,
    B2,
    A,
    N,
    Tau,
}

impl SweepParam {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "a1" => Self::A1,
            "a2" => Self::A2,
            "a12" => Self::A12,
            "a21" => Self::A21,
            "b1" => Self::B1,
            "b2" => Self::B2,
            "a" => Self::A,
            "n" => Self::N,
            "tau" => Self::Tau,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::A1 => "a1",
            Self::A2 => "a2",
            Self::A12 => "a12",
            Self::A21 => "a21",
            Self::B1 => "b1",
            Self::B2 => "b2",
            Self::A => "a",
            Self::N => "n",
            Self::Tau => "tau",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub enabled: bool,
    /// Explicit simulation delay; falls back to the top-level `tau`, then
    /// to `tau_factor * tau_c`.
    pub tau: Option<f64>,
    pub tau_factor: f64,
    /// Explicit end time; otherwise `periods` oscillation periods at `omega_c`.
    pub t_end: Option<f64>,
    pub periods: f64,
    /// Explicit step (must divide the delay); otherwise the largest divisor
    /// of the delay not exceeding `max_step`.
    pub step: Option<f64>,
    pub max_step: f64,
    pub perturbation: f64,
    /// Also write the centre-manifold reconstruction.
    pub manifold: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            tau: None,
            tau_factor: 1.05,
            t_end: None,
            periods: 50.0,
            step: None,
            max_step: 0.05,
            perturbation: DEFAULT_PERTURBATION,
            manifold: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write every n-th sample; otherwise chosen to stay under `max_rows`.
    pub every: Option<usize>,
    pub max_rows: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), every: None, max_rows: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub params: ModelParams,
    /// Delay at which to classify stability (and simulate, unless `sim.tau` is set).
    pub tau: Option<f64>,
    pub k_max: usize,
    pub sweep: Option<SweepSpec>,
    pub sim: SimConfig,
    pub output: OutputConfig,
    pub workers: usize,
    pub readings: FormulaReadings,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            params: ModelParams::reference(2),
            tau: None,
            k_max: DEFAULT_K_MAX,
            sweep: None,
            sim: SimConfig::default(),
            output: OutputConfig::default(),
            workers: 1,
            readings: FormulaReadings::DERIVED,
        }
    }
}

/// The four published cases.
pub const PRESETS: [(&str, u32); 4] = [("n2", 2), ("n4", 4), ("n163", 163), ("n164", 164)];

pub fn preset(name: &str) -> Option<AnalysisConfig> {
    let (_, n) = PRESETS.iter().find(|(k, _)| *k == name)?;
    Some(AnalysisConfig { params: ModelParams::reference(*n), ..AnalysisConfig::default() })
}

fn bad(line: usize, key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue { line, key: key.into(), value: value.into(), reason: reason.into() }
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = value.parse().map_err(|_| bad(line, key, value, "not a number"))?;
    if !v.is_finite() {
        return Err(bad(line, key, value, "must be finite"));
    }
    Ok(v)
}

fn parse_usize(line: usize, key: &str, value: &str) -> Result<usize, ConfigError> {
    value.parse().map_err(|_| bad(line, key, value, "not a non-negative integer"))
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(line, key, value, "expected `true` or `false`")),
    }
}

fn parse_positive(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    let v = parse_f64(line, key, value)?;
    if v <= 0.0 {
        return Err(bad(line, key, value, "must be positive"));
    }
    Ok(v)
}

impl AnalysisConfig {
    /// Parses `text` on top of `self`.
    pub fn apply(mut self, text: &str) -> Result<Self, ConfigError> {
        let mut seen = HashSet::new();
        let mut sweep_param = None;
        let mut sweep_values = None;
        let (mut start, mut end, mut count) = (None, None, None);

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax { line, message: format!("expected `key = value`, got `{content}`") });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax { line, message: "empty key".into() });
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Duplicate { line, key: key.into() });
            }
            let p = &mut self.params;
            match key {
                "model.a1" => p.a1 = parse_f64(line, key, value)?,
                "model.a2" => p.a2 = parse_f64(line, key, value)?,
                "model.a12" => p.a12 = parse_f64(line, key, value)?,
                "model.a21" => p.a21 = parse_f64(line, key, value)?,
                "model.b1" => p.b1 = parse_f64(line, key, value)?,
                "model.b2" => p.b2 = parse_f64(line, key, value)?,
                "model.a" => p.a = parse_f64(line, key, value)?,
                "model.n" => {
                    p.n = value.parse().map_err(|_| bad(line, key, value, "not a positive integer"))?;
                }
                "tau" => self.tau = Some(parse_positive(line, key, value)?),
                "analysis.k_max" => self.k_max = parse_usize(line, key, value)?,
                "sweep.param" => {
                    sweep_param = Some(SweepParam::parse(value).ok_or_else(|| bad(line, key, value, "unknown parameter"))?);
                }
                "sweep.values" => {
                    let vals = value
                        .split(',')
                        .map(|s| parse_f64(line, key, s.trim()))
                        .collect::<Result<Vec<_>, _>>()?;
                    sweep_values = Some(vals);
                }
                "sweep.start" => start = Some(parse_f64(line, key, value)?),
                "sweep.end" => end = Some(parse_f64(line, key, value)?),
                "sweep.count" => count = Some(parse_usize(line, key, value)?),
                "sim.enabled" => self.sim.enabled = parse_bool(line, key, value)?,
                "sim.tau" => self.sim.tau = Some(parse_positive(line, key, value)?),
                "sim.tau_factor" => self.sim.tau_factor = parse_positive(line, key, value)?,
                "sim.t_end" => self.sim.t_end = Some(parse_positive(line, key, value)?),
                "sim.periods" => self.sim.periods = parse_positive(line, key, value)?,
                "sim.step" => self.sim.step = Some(parse_positive(line, key, value)?),
                "sim.max_step" => self.sim.max_step = parse_positive(line, key, value)?,
                "sim.perturbation" => self.sim.perturbation = parse_f64(line, key, value)?,
                "sim.manifold" => self.sim.manifold = parse_bool(line, key, value)?,
                "output.dir" => self.output.dir = PathBuf::from(value),
                "output.every" => self.output.every = Some(parse_usize(line, key, value)?.max(1)),
                "output.max_rows" => self.output.max_rows = parse_usize(line, key, value)?.max(2),
                "run.workers" => self.workers = parse_usize(line, key, value)?,
                "normal_form.literal" => {
                    if parse_bool(line, key, value)? {
                        self.readings = FormulaReadings::LITERAL;
                    }
                }
                "normal_form.literal_f4_11" => self.readings.literal_f4_11 = parse_bool(line, key, value)?,
                "normal_form.literal_f4_02" => self.readings.literal_f4_02 = parse_bool(line, key, value)?,
                "normal_form.literal_w4_20" => self.readings.literal_w4_20 = parse_bool(line, key, value)?,
                "normal_form.literal_cubic_lags" => self.readings.literal_cubic_lags = parse_bool(line, key, value)?,
                _ => return Err(ConfigError::UnknownKey { line, key: key.into() }),
            }
        }

        let range = match (start, end, count) {
            (None, None, None) => None,
            (Some(s), Some(e), Some(c)) if c >= 1 => {
                Some(if c == 1 { vec![s] } else { (0..c).map(|i| s + (e - s) * i as f64 / (c - 1) as f64).collect() })
            }
            _ => return Err(ConfigError::Invalid("sweep.start, sweep.end and sweep.count (>= 1) go together".into())),
        };
        let values = match (sweep_values, range) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid("give either sweep.values or sweep.start/end/count".into()));
            }
            (v, r) => v.or(r),
        };
        match (sweep_param, values) {
            (Some(param), Some(values)) => self.sweep = Some(SweepSpec { param, values }),
            (None, None) => {}
            _ => return Err(ConfigError::Invalid("a sweep needs both sweep.param and its values".into())),
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.workers == 0 {
            return Err(ConfigError::Invalid("run.workers must be at least 1".into()));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(ConfigError::Invalid("empty sweep".into()));
            }
        }
        for (_, params, tau) in self.runs()? {
            params.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
            if let Some(t) = tau {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(ConfigError::Invalid(format!("tau must be positive, got {t}")));
                }
            }
        }
        if !(self.sim.perturbation.is_finite() && self.sim.perturbation > -1.0) {
            return Err(ConfigError::Invalid("sim.perturbation must be finite and > -1".into()));
        }
        Ok(())
    }

    /// The individual runs: label, parameters and explicit delay.
    pub fn runs(&self) -> Result<Vec<(String, ModelParams, Option<f64>)>, ConfigError> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![(format!("n={}", self.params.n), self.params, self.tau)]);
        };
        sweep
            .values
            .iter()
            .map(|&v| {
                let mut p = self.params;
                let mut tau = self.tau;
                match sweep.param {
                    SweepParam::A1 => p.a1 = v,
                    SweepParam::A2 => p.a2 = v,
                    SweepParam::A12 => p.a12 = v,
                    SweepParam::A21 => p.a21 = v,
                    SweepParam::B1 => p.b1 = v,
                    SweepParam::B2 => p.b2 = v,
                    SweepParam::A => p.a = v,
                    SweepParam::N => {
                        if v.fract() != 0.0 || v < 1.0 || v > u32::MAX as f64 {
                            return Err(ConfigError::Invalid(format!("sweep value {v} is not a valid Hill exponent")));
                        }
                        p.n = v as u32;
                    }
                    SweepParam::Tau => tau = Some(v),
                }
                Ok((format!("{}={}", sweep.param.name(), v), p, tau))
            })
            .collect()
    }
}
