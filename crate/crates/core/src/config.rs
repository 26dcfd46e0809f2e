//! Run configuration: calibration, noise, detector, preparation,
//! integration and harness settings, with a flat `key = value` text format
//! whose values use the same unit lexicon as the sequence language.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::measure::{DetectorModel, PrepModel};
use crate::noise::NoiseModel;
use crate::propagator::{Method, Physics, PropagatorConfig, SimContext};
use crate::pulses::StirapParams;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {message}")]
    BadValue { key: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// Fully-resolved harness configuration. Serialized into every result
/// sidecar so runs can be reproduced from their outputs alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Static field, gauss.
    pub b_field: f64,
    pub noise: NoiseModel<f64>,
    pub detector: DetectorModel<f64>,
    pub prep: PrepModel<f64>,
    pub propagator: PropagatorConfig<f64>,
    /// Master seed; every random stream is derived from it. Runs never
    /// seed from the clock.
    pub seed: u64,
    /// Shots per sweep point.
    pub shots: usize,
    /// Rabi frequency of the bare microwave transfer pulses, Hz.
    pub mw_rabi_hz: f64,
    /// Reference STIRAP ramp parameters.
    pub stirap: StirapParams<f64>,
    /// Fits with reduced chi² above this bound are rejected.
    pub fit_max_reduced_chi2: f64,
    /// Output directory for CSV/JSON results (CLI concern).
    pub output_dir: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            b_field: 9.80,
            noise: NoiseModel::quiet(0),
            detector: DetectorModel::standard(),
            prep: PrepModel::ideal(),
            propagator: PropagatorConfig::default(),
            seed: 0,
            shots: 200,
            mw_rabi_hz: 342e3,
            stirap: StirapParams {
                fwhm: 450e-6,
                t_off: 356e-6,
                peak_hz: 25e3,
            },
            fit_max_reduced_chi2: 4.0,
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.noise.validate().map_err(ConfigError::Invalid)?;
        self.detector.validate().map_err(ConfigError::Invalid)?;
        self.prep.validate().map_err(ConfigError::Invalid)?;
        if self.b_field < 0.0 {
            return Err(ConfigError::Invalid("b_field must be ≥ 0".into()));
        }
        if self.shots == 0 {
            return Err(ConfigError::Invalid("shots must be ≥ 1".into()));
        }
        if self.mw_rabi_hz <= 0.0 {
            return Err(ConfigError::Invalid("mw_rabi must be > 0".into()));
        }
        if !(self.fit_max_reduced_chi2 > 0.0) {
            return Err(ConfigError::Invalid(
                "fit_max_reduced_chi2 must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Simulation context with the noise model keyed by the run seed.
    pub fn sim_context(&self) -> SimContext<f64> {
        let mut noise = self.noise;
        noise.seed = self.seed;
        SimContext {
            physics: Physics::at_field(self.b_field),
            noise,
            detector: self.detector,
            prep: self.prep,
            propagator: self.propagator,
        }
    }

    /// Apply one `key = value` override. `value` uses the sequence-language
    /// unit lexicon; a handful of keys take words instead.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let num = |value: &str| -> Result<f64, ConfigError> {
            crate::seqlang::parse_scalar(value).map_err(|message| ConfigError::BadValue {
                key: key.to_string(),
                message,
            })
        };
        match key {
            "b_field" | "B" => self.b_field = num(value)?,
            "seed" => {
                self.seed = value.parse().map_err(|_| ConfigError::BadValue {
                    key: key.into(),
                    message: format!("`{value}` is not an unsigned integer"),
                })?
            }
            "shots" => {
                self.shots = value.parse().map_err(|_| ConfigError::BadValue {
                    key: key.into(),
                    message: format!("`{value}` is not an unsigned integer"),
                })?
            }
            "mw_rabi" => self.mw_rabi_hz = num(value)?,
            "qs_sigma" => self.noise.quasi_static_sigma = num(value)?,
            "ou_sigma" => self.noise.ou_sigma = num(value)?,
            "ou_tau" => self.noise.ou_tau = num(value)?,
            "mains_amplitude" => self.noise.mains_amplitude = num(value)?,
            "mains_freq" => self.noise.mains_freq = num(value)?,
            "mains_phase" => self.noise.mains_phase = num(value)?,
            "lambda_bright" => self.detector.lambda_bright = num(value)?,
            "lambda_dark" => self.detector.lambda_dark = num(value)?,
            "leak_bright_to_dark" => self.detector.p_leak_bright_to_dark = num(value)?,
            "leak_dark_to_bright" => self.detector.p_leak_dark_to_bright = num(value)?,
            "threshold" => {
                self.detector.threshold = value.parse().map_err(|_| ConfigError::BadValue {
                    key: key.into(),
                    message: format!("`{value}` is not an unsigned integer"),
                })?
            }
            "detector" => match value {
                "ideal" => self.detector = DetectorModel::ideal(),
                "standard" => self.detector = DetectorModel::standard(),
                other => {
                    return Err(ConfigError::BadValue {
                        key: key.into(),
                        message: format!("unknown detector preset `{other}`"),
                    })
                }
            },
            "prep_error" => self.prep.p_prep_error = num(value)?,
            "stirap_tw" => self.stirap.fwhm = num(value)?,
            "stirap_toff" => self.stirap.t_off = num(value)?,
            "stirap_peak" => self.stirap.peak_hz = num(value)?,
            "method" => match value {
                "piecewise_exponential" => self.propagator.method = Method::PiecewiseExponential,
                "rk4" => self.propagator.method = Method::Rk4,
                other => {
                    return Err(ConfigError::BadValue {
                        key: key.into(),
                        message: format!("unknown method `{other}`"),
                    })
                }
            },
            "dt_max" => self.propagator.dt_max = num(value)?,
            "norm_tolerance" => self.propagator.norm_tolerance = num(value)?,
            "oversample" => self.propagator.oversample = num(value)?,
            "min_ramp_steps" => {
                self.propagator.min_ramp_steps =
                    value.parse().map_err(|_| ConfigError::BadValue {
                        key: key.into(),
                        message: format!("`{value}` is not an unsigned integer"),
                    })?
            }
            "fit_max_reduced_chi2" => self.fit_max_reduced_chi2 = num(value)?,
            "output_dir" => self.output_dir = Some(value.to_string()),
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Parse a flat `key = value` config file on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            if stripped.trim().is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("expected `key = value`, found `{}`", stripped.trim()),
                });
            };
            self.set(key.trim(), value.trim())
                .map_err(|e| ConfigError::Parse {
                    line,
                    message: e.to_string(),
                })?;
        }
        self.validate()
    }
}

/// Word-valued experiment parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Word(String),
}

pub type Params = BTreeMap<String, ParamValue>;
