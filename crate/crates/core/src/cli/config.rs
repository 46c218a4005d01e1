//! Experiment configuration.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::dynamics::{ApRamp, GradientParams, PulseParams, DEFAULT_AP_STEPS};
use crate::measure::{ErrorModel, LossMode, PopulationNorm};
use crate::potential::{GridSpec, TweezerParams};

/// Built-in configuration for the 91 kHz exchange trap.
pub const PAPER_DEFAULTS: &str = include_str!("../../configs/paper_defaults.json");

/// Scan axis: explicit values or an evenly spaced range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        points: usize,
        #[serde(default)]
        log: bool,
    },
}

impl Grid {
    pub fn linspace(start: f64, stop: f64, points: usize) -> Self {
        Grid::Range { start, stop, points, log: false }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, points, log } => {
                let n = *points;
                let (a, b) = if *log { (start.ln(), stop.ln()) } else { (*start, *stop) };
                (0..n)
                    .map(|k| {
                        let x = if n == 1 { a } else { a + (b - a) * k as f64 / (n - 1) as f64 };
                        if *log {
                            x.exp()
                        } else {
                            x
                        }
                    })
                    .collect()
            }
        }
    }

    fn validate(&self, name: &str) -> Result<(), CliError> {
        let values = self.values();
        if values.is_empty() {
            return Err(CliError::Config(format!("grid `{name}` is empty")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Config(format!("grid `{name}` has non-finite values")));
        }
        if let Grid::Range { start, stop, log: true, .. } = self {
            if !(*start > 0.0 && *stop > 0.0) {
                return Err(CliError::Config(format!("log grid `{name}` needs positive bounds")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampConfig {
    pub delta_start_hz: f64,
    pub delta_end_hz: f64,
    pub duration_s: f64,
    pub j_eg_hz: f64,
    /// Defaults to J_ex/2.
    #[serde(default)]
    pub u_eg_hz: Option<f64>,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_steps() -> usize {
    DEFAULT_AP_STEPS
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExchangeConfig {
    /// Defaults to the harmonic estimate from the trap.
    #[serde(default)]
    pub j_ex_hz: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorModels {
    pub exchange: ErrorModel,
    pub parity: ErrorModel,
}

/// How the double adiabatic passage enters the pipelines.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApMode {
    /// Perfect transfer with no relative singlet–triplet phase.
    #[default]
    Ideal,
    /// Propagate the four-level model and carry its singlet–triplet phase.
    Simulated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificationConfig {
    pub p_upup_se: f64,
    pub p_dndn_se: f64,
    pub ap_success_f_se: f64,
    #[serde(default)]
    pub monte_carlo_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    pub exchange_times_s: Grid,
    pub gradient_times_s: Grid,
    pub depths_hz: Grid,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParitySettings {
    /// Defaults to a quarter exchange period.
    #[serde(default)]
    pub exchange_time_s: Option<f64>,
    /// Defaults to a quarter gradient period.
    #[serde(default)]
    pub gradient_time_s: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthSweepSettings {
    pub fit_frequency: bool,
    /// Exchange periods covered by each simulated oscillation.
    pub periods: f64,
    pub points: usize,
    /// Defaults to `shots_per_point`.
    #[serde(default)]
    pub shots: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Free-form descriptions of the fields; ignored by the pipelines.
    #[serde(default)]
    pub notes: BTreeMap<String, String>,
    pub trap: TweezerParams,
    pub ramp: RampConfig,
    #[serde(default)]
    pub exchange: ExchangeConfig,
    pub gradient: GradientParams,
    pub pulse: PulseParams,
    pub error_models: ErrorModels,
    pub dephasing_sigma_rad: f64,
    #[serde(default)]
    pub ap_mode: ApMode,
    /// Parity contrast to reproduce by reducing the anti-aligned coherence.
    #[serde(default)]
    pub target_contrast: Option<f64>,
    pub shots_per_point: usize,
    pub seed: u64,
    #[serde(default)]
    pub loss_mode: LossMode,
    #[serde(default)]
    pub population_norm: PopulationNorm,
    pub certification: CertificationConfig,
    pub grids: Grids,
    #[serde(default)]
    pub numeric_grid: GridSpec,
    #[serde(default)]
    pub parity: ParitySettings,
    pub depth_sweep: DepthSweepSettings,
}

impl ExperimentConfig {
    pub fn paper_defaults() -> Self {
        Self::from_json(PAPER_DEFAULTS).expect("built-in configuration parses")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.trap.validate()?;
        self.ramp_params(1.0).validate()?;
        if self.ramp.steps == 0 {
            return Err(CliError::Config("ramp.steps must be positive".into()));
        }
        if let Some(j) = self.exchange.j_ex_hz {
            if !(j >= 0.0 && j.is_finite()) {
                return Err(CliError::Config(format!("exchange.j_ex_hz must be ≥ 0 (got {j})")));
            }
        }
        if !self.gradient.delta_hz.is_finite() || self.gradient.delta_hz == 0.0 {
            return Err(CliError::Config("gradient.delta_hz must be finite and non-zero".into()));
        }
        if !self.pulse.area_rad.is_finite() || !self.pulse.phase_rad.is_finite() {
            return Err(CliError::Config("pulse angles must be finite".into()));
        }
        self.error_models.exchange.validate()?;
        self.error_models.parity.validate()?;
        if !(self.dephasing_sigma_rad >= 0.0 && self.dephasing_sigma_rad.is_finite()) {
            return Err(CliError::Config("dephasing_sigma_rad must be ≥ 0".into()));
        }
        if let Some(c) = self.target_contrast {
            if !(c > 0.0 && c <= 2.0) {
                return Err(CliError::Config(format!("target_contrast must be in (0, 2] (got {c})")));
            }
        }
        if self.shots_per_point == 0 {
            return Err(CliError::Config("shots_per_point must be positive".into()));
        }
        let c = &self.certification;
        for (name, v) in [("p_upup_se", c.p_upup_se), ("p_dndn_se", c.p_dndn_se), ("ap_success_f_se", c.ap_success_f_se)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("certification.{name} must be ≥ 0")));
            }
        }
        self.grids.exchange_times_s.validate("exchange_times_s")?;
        self.grids.gradient_times_s.validate("gradient_times_s")?;
        self.grids.depths_hz.validate("depths_hz")?;
        if self.grids.depths_hz.values().iter().any(|d| *d <= 0.0) {
            return Err(CliError::Config("depths must be positive".into()));
        }
        if self.numeric_grid.points < 3 || !(self.numeric_grid.half_width_waists > 0.0) {
            return Err(CliError::Config("numeric_grid needs ≥ 3 points and a positive half width".into()));
        }
        let d = &self.depth_sweep;
        if d.fit_frequency && (d.points < 8 || !(d.periods >= 1.0)) {
            return Err(CliError::Config("depth_sweep needs ≥ 8 points over ≥ 1 period".into()));
        }
        if d.shots == Some(0) {
            return Err(CliError::Config("depth_sweep.shots must be positive".into()));
        }
        Ok(())
    }

    /// Exchange frequency used by the pipelines (Hz).
    pub fn j_ex_hz(&self) -> Result<f64, CliError> {
        match self.exchange.j_ex_hz {
            Some(j) => Ok(j),
            None => Ok(crate::potential::j_ex(&self.trap)?),
        }
    }

    /// Ramp for a given exchange frequency; U_eg defaults to J_ex/2.
    pub fn ramp_params(&self, j_ex_hz: f64) -> ApRamp {
        ApRamp {
            delta_start_hz: self.ramp.delta_start_hz,
            delta_end_hz: self.ramp.delta_end_hz,
            duration_s: self.ramp.duration_s,
            j_eg_hz: self.ramp.j_eg_hz,
            u_eg_hz: self.ramp.u_eg_hz.unwrap_or(0.5 * j_ex_hz),
        }
    }

    pub fn parity_exchange_time(&self, j_ex_hz: f64) -> f64 {
        self.parity.exchange_time_s.unwrap_or(0.25 / j_ex_hz)
    }

    pub fn parity_gradient_time(&self) -> f64 {
        self.parity.gradient_time_s.unwrap_or_else(|| self.gradient.quarter_period())
    }

    pub fn depth_sweep_shots(&self) -> usize {
        self.depth_sweep.shots.unwrap_or(self.shots_per_point)
    }
}
