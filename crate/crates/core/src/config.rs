//! Run configuration shared by every command.
//!
//! One JSON document carries the physical setup and one optional section per
//! command. Unknown keys are rejected. `schema_version` must equal
//! [`SCHEMA_VERSION`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::{EnsembleConfig, FieldConfig, InitialConditions, SpectrumConfig};
use crate::error::{config_err, Result, SedError};
use crate::force::ForceSpec;
use crate::scales::PhysicalScales;

pub const SCHEMA_VERSION: u32 = 1;

fn default_force() -> ForceSpec {
    ForceSpec::Harmonic
}
fn default_true() -> bool {
    true
}
fn default_block_time() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub scales: PhysicalScales,
    #[serde(default = "default_force")]
    pub force: ForceSpec,
    #[serde(default)]
    pub field: FieldConfig,
    /// Master seed; every random stream is derived from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balance: Option<BalanceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlate: Option<CorrelateSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub x0: f64,
    pub p0: f64,
    #[serde(default)]
    pub t0: f64,
    pub t_total: f64,
    pub dt: f64,
    /// Drive the particle with the field (otherwise free decay).
    #[serde(default = "default_true")]
    pub field_on: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub n_traj: usize,
    pub t_total: f64,
    pub dt: f64,
    pub burn_in: f64,
    pub initial: InitialConditions,
    #[serde(default = "default_true")]
    pub stationary: bool,
    #[serde(default = "default_true")]
    pub retain_drive: bool,
    #[serde(default)]
    pub keep_trajectories: bool,
    #[serde(default = "default_block_time")]
    pub block_time: f64,
    #[serde(default)]
    pub threads: Option<usize>,
    /// Averaging window for stationary moments; defaults to `[burn_in, t_total]`.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSection {
    /// Diagonalize in an oscillator basis of this size; analytic oscillator
    /// matrices are used when absent and the force is harmonic.
    #[serde(default)]
    pub basis_size: Option<usize>,
    /// State count for analytic oscillator matrices.
    #[serde(default)]
    pub n_states: Option<usize>,
    /// Tolerance of the identity checks.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceSection {
    /// States for which decay channels are predicted.
    #[serde(default)]
    pub states: Vec<usize>,
    /// Cutoffs at which the position trace is tabulated.
    #[serde(default)]
    pub trace_cutoffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    /// Finest frequency resolution the run must provide.
    pub resolution: f64,
    #[serde(default = "default_pad")]
    pub pad_factor: usize,
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
}

fn default_pad() -> usize {
    4
}
fn default_omega_max() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelateSection {
    pub n_realizations: usize,
    /// Length of the field window (sets the mode spacing).
    pub t_total: f64,
    pub dt: f64,
    pub max_lag: f64,
    /// Spacing of the lag grid; defaults to `dt`.
    #[serde(default)]
    pub lag_step: Option<f64>,
    /// Averaging window length inside each realization.
    pub window: f64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SedError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return config_err(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        self.scales.validate()?;
        self.force.build(&self.scales)?;
        Ok(())
    }

    pub fn section<'a, T>(&self, name: &str, s: &'a Option<T>) -> Result<&'a T> {
        s.as_ref().ok_or_else(|| SedError::Config(format!("missing `{name}` section")))
    }

    /// Ensemble configuration with the optional spectrum section attached.
    pub fn ensemble_config(&self) -> Result<EnsembleConfig> {
        let e = self.section("ensemble", &self.ensemble)?;
        let cfg = EnsembleConfig {
            scales: self.scales,
            force: self.force.clone(),
            field: self.field.clone(),
            n_traj: e.n_traj,
            master_seed: self.seed,
            t_total: e.t_total,
            dt: e.dt,
            burn_in: e.burn_in,
            initial: e.initial.clone(),
            stationary: e.stationary,
            retain_drive: e.retain_drive,
            keep_trajectories: e.keep_trajectories,
            block_time: e.block_time,
            spectrum: self
                .spectrum
                .as_ref()
                .map(|s| SpectrumConfig { pad_factor: s.pad_factor, omega_max: s.omega_max }),
            threads: e.threads,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn window(&self) -> Result<(f64, f64)> {
        let e = self.section("ensemble", &self.ensemble)?;
        Ok(e.window.unwrap_or((e.burn_in, e.t_total)))
    }
}
