use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

/// Physical scales of the bound charge.
///
/// The charge and the speed of light never appear on their own: the coupling
/// to the field enters only through `m * tau * hbar / pi`, and the
/// radiation-reaction time `tau` carries the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalScales {
    pub hbar: f64,
    pub m: f64,
    pub tau: f64,
    pub omega0: f64,
}

/// Above this value of `tau * omega0` a warning is logged.
pub const NARROW_RESONANCE_WARN: f64 = 0.05;
/// Hard limit on `tau * omega0`.
pub const NARROW_RESONANCE_MAX: f64 = 0.1;

impl PhysicalScales {
    pub fn new(hbar: f64, m: f64, tau: f64, omega0: f64) -> Result<Self> {
        let s = PhysicalScales { hbar, m, tau, omega0 };
        s.validate()?;
        Ok(s)
    }

    /// Reference configuration: hbar = m = omega0 = 1, tau = 1e-2.
    pub fn reference() -> Self {
        PhysicalScales { hbar: 1.0, m: 1.0, tau: 1e-2, omega0: 1.0 }
    }

    pub fn with_tau(self, tau: f64) -> Self {
        PhysicalScales { tau, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.m > 0.0 && self.omega0 > 0.0) {
            return config_err("hbar, m and omega0 must be strictly positive");
        }
        if !(self.tau >= 0.0) {
            return config_err("tau must be non-negative");
        }
        let q = self.tau * self.omega0;
        if q > NARROW_RESONANCE_MAX {
            return config_err(format!(
                "tau*omega0 = {q} exceeds {NARROW_RESONANCE_MAX}; the narrow-resonance regime is required"
            ));
        }
        if q > NARROW_RESONANCE_WARN {
            log::warn!("tau*omega0 = {q} is above {NARROW_RESONANCE_WARN}; resonances are not narrow");
        }
        Ok(())
    }

    /// Prefactor of the force spectral density, `m tau hbar / pi`.
    pub fn spectral_prefactor(&self) -> f64 {
        self.m * self.tau * self.hbar / std::f64::consts::PI
    }

    /// Amplitude decay rate of the harmonic oscillator, `tau omega0^2 / 2`.
    pub fn amplitude_decay_rate(&self) -> f64 {
        0.5 * self.tau * self.omega0 * self.omega0
    }

    /// Energy decay time `1 / (tau omega0^2)`; infinite when `tau = 0`.
    pub fn energy_decay_time(&self) -> f64 {
        1.0 / (self.tau * self.omega0 * self.omega0)
    }

    /// Correlation (amplitude memory) time `2 / (tau omega0^2)`.
    pub fn correlation_time(&self) -> f64 {
        2.0 / (self.tau * self.omega0 * self.omega0)
    }
}

impl Default for PhysicalScales {
    fn default() -> Self {
        Self::reference()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_times() {
        let s = PhysicalScales::reference();
        assert!((s.correlation_time() - 200.0).abs() < 1e-9);
        assert!((s.energy_decay_time() - 100.0).abs() < 1e-9);
        assert!((s.amplitude_decay_rate() - 5e-3).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_scales() {
        assert!(PhysicalScales::new(0.0, 1.0, 0.01, 1.0).is_err());
        assert!(PhysicalScales::new(1.0, 1.0, -0.01, 1.0).is_err());
        assert!(PhysicalScales::new(1.0, 1.0, 0.2, 1.0).is_err());
        assert!(PhysicalScales::new(1.0, 1.0, 0.07, 1.0).is_ok());
        assert!(PhysicalScales::new(1.0, 1.0, 0.0, 1.0).is_ok());
    }
}
