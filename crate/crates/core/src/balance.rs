//! Energy flow between particle and field.
//!
//! Measurements come from ensembles, predictions from transition matrices.
//! The coupling `e²/c³` is expressed through `τ` everywhere, so an emission
//! rate reads `A_nk = 2mτ ω³ |x_nk|² / ħ`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::ensemble::{energy_drift, stationary_samples, EnsembleReport};
use crate::error::{config_err, Result, SedError};
use crate::matrix::TransitionMatrix;
use crate::quad::{integrate, principal_value};
use crate::scales::PhysicalScales;
use crate::stats::{mean_stderr, Estimate};

/// Half-width of the excluded window around each resonance, in units of ω0.
pub const PV_EXCLUSION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub window: (f64, f64),
    /// `⟨(τ/m) f'(x) p ẋ⟩`
    pub radiated: Estimate,
    /// `⟨p E⟩ e/m`
    pub absorbed: Estimate,
    /// `radiated + absorbed`, with the pairing between the two kept in the error.
    pub net_power: Estimate,
    /// Slope of a linear fit to `⟨H⟩(t)`.
    pub net_drift: Estimate,
    pub drift_within_3_sigma: bool,
    pub dpx: Estimate,
    pub dpp: Estimate,
}

pub fn measure_balance(report: &EnsembleReport, window: (f64, f64)) -> Result<BalanceReport> {
    if !report.config.retain_drive {
        return config_err("drive samples were not retained; absorbed power cannot be measured");
    }
    let (samples, used) = stationary_samples(report, window)?;
    let col = |c: usize| -> Vec<f64> { samples.iter().map(|s| s[c]).collect() };
    let net: Vec<f64> = samples.iter().map(|s| s[7] + s[8]).collect();
    let net_drift = energy_drift(report, used)?;
    Ok(BalanceReport {
        window: used,
        radiated: mean_stderr(&col(7)),
        absorbed: mean_stderr(&col(8)),
        net_power: mean_stderr(&net),
        drift_within_3_sigma: net_drift.within_sigma(0.0, 3.0),
        net_drift,
        dpx: mean_stderr(&col(5)),
        dpp: mean_stderr(&col(6)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    /// `ω_nk > 0`
    pub omega: f64,
    pub a_coefficient: f64,
    /// `ħ ω A`
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayPrediction {
    pub state: usize,
    pub transitions: Vec<Transition>,
    /// `−Σ ħ ω A`
    pub dh_dt: f64,
    pub warning: Option<String>,
}

fn check_state(tm: &TransitionMatrix, n: usize) -> Result<Option<String>> {
    if n >= tm.n_states() {
        return config_err(format!("state {n} is outside the {} computed states", tm.n_states()));
    }
    if n >= tm.trusted() {
        let msg = format!("state {n} lies in the truncation margin");
        warn!("{msg}");
        return Ok(Some(msg));
    }
    Ok(None)
}

/// Spontaneous-emission channels out of state `n`.
pub fn predict_decay(tm: &TransitionMatrix, n: usize) -> Result<DecayPrediction> {
    let warning = check_state(tm, n)?;
    let PhysicalScales { hbar, m, tau, .. } = tm.scales;
    let transitions: Vec<Transition> = (0..tm.n_states())
        .filter_map(|k| {
            let w = tm.omega(k, n);
            let x2 = tm.x[(n, k)].norm_sqr();
            (w > 0.0 && x2 > 0.0).then(|| {
                let a = 2.0 * m * tau * w.powi(3) * x2 / hbar;
                Transition { from: n, to: k, omega: w, a_coefficient: a, power: hbar * w * a }
            })
        })
        .collect();
    let dh_dt = -transitions.iter().map(|t| t.power).sum::<f64>();
    Ok(DecayPrediction { state: n, transitions, dh_dt, warning })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumTrace {
    pub state: usize,
    pub omega_cut: f64,
    pub value: f64,
    /// Transitions beyond the cutoff, left out of the sum.
    pub dropped: Vec<usize>,
}

/// Stationary `e⟨pE⟩` in state `n`: `m²τ Σ_k |x_nk|² sign(ω_kn) ω_kn⁴`
/// over transitions inside the cutoff.
pub fn trace_dpp(tm: &TransitionMatrix, n: usize, omega_cut: f64) -> Result<MomentumTrace> {
    check_state(tm, n)?;
    let PhysicalScales { m, tau, .. } = tm.scales;
    let mut value = 0.0;
    let mut dropped = Vec::new();
    for k in (0..tm.n_states()).filter(|&k| k != n) {
        let w = tm.omega(n, k);
        let x2 = tm.x[(n, k)].norm_sqr();
        if x2 == 0.0 {
            continue;
        }
        if w.abs() > omega_cut {
            dropped.push(k);
            continue;
        }
        value += x2 * w.signum() * w.powi(4);
    }
    if !dropped.is_empty() {
        warn!("trace_dpp: {} transitions above the cutoff {omega_cut} dropped", dropped.len());
    }
    Ok(MomentumTrace { state: n, omega_cut, value: m * m * tau * value, dropped })
}

/// Stationary `e⟨xE⟩` in state `n` as a function of the cutoff.
///
/// `total = (2mτ/π) Σ_k |x_nk|² PV∫₀^{ω_c} ω³ ω_kn / (ω_kn² − ω²) dω`.
/// Its quadratic growth is the state-independent free-particle part
/// `−(τħ/2π) ω_c²` (fixed by the sum rule); `renormalized` is what remains and
/// grows only logarithmically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionTrace {
    pub state: usize,
    pub omega_cut: f64,
    pub total: f64,
    pub free_particle: f64,
    pub renormalized: f64,
    /// Largest Richardson-level difference among the principal values.
    pub pv_diagnostic: f64,
}

pub fn trace_dpx(tm: &TransitionMatrix, n: usize, omega_cut: f64) -> Result<PositionTrace> {
    check_state(tm, n)?;
    let PhysicalScales { hbar, m, tau, omega0 } = tm.scales;
    let weights: Vec<(f64, f64)> = (0..tm.n_states())
        .filter(|&k| k != n)
        .map(|k| (tm.x[(n, k)].norm_sqr(), tm.omega(n, k)))
        .filter(|&(x2, _)| x2 > 0.0)
        .collect();
    let largest = weights.iter().map(|w| w.0).fold(0.0, f64::max);
    let delta = PV_EXCLUSION * omega0;
    let mut total = 0.0;
    let mut diag = 0.0f64;
    for &(x2, w) in &weights {
        if x2 < 1e-16 * largest {
            continue;
        }
        if w.abs() + 2.0 * delta >= omega_cut {
            return config_err(format!("cutoff {omega_cut} does not exceed transition frequency {}", w.abs()));
        }
        let f = |om: f64| om.powi(3) * w / (w * w - om * om);
        let (v, d) = principal_value(f, 0.0, omega_cut, &[w.abs()], delta, 1e-12)
            .map_err(|e| SedError::Numerical(format!("state {n}, transition ω = {w}: {e}")))?;
        total += x2 * v;
        diag = diag.max(x2 * d);
    }
    let pref = 2.0 * m * tau / std::f64::consts::PI;
    let total = pref * total;
    let free_particle = -tau * hbar * omega_cut * omega_cut / (2.0 * std::f64::consts::PI);
    Ok(PositionTrace {
        state: n,
        omega_cut,
        total,
        free_particle,
        renormalized: total - free_particle,
        pv_diagnostic: pref * diag,
    })
}

/// Stationary `⟨x²⟩`, `⟨p²⟩` of the linearly responding harmonic oscillator
/// driven by the band-limited field (spectral quadrature).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearResponse {
    pub omega_cut: f64,
    pub x2: f64,
    pub p2: f64,
    pub energy: f64,
    pub dx_dp: f64,
    /// `τ⟨p²⟩ω0²/m²`, the expected magnitude of the radiated power.
    pub radiated: f64,
}

pub fn harmonic_linear_response(scales: &PhysicalScales, omega_cut: f64) -> Result<LinearResponse> {
    let PhysicalScales { m, tau, omega0, .. } = *scales;
    let pref = scales.spectral_prefactor();
    let gamma = tau * omega0 * omega0;
    let susc = |w: f64| 1.0 / (m * m * ((omega0 * omega0 - w * w).powi(2) + gamma * gamma * w * w));
    let width = (10.0 * gamma).max(1e-3 * omega0);
    let mut edges = vec![0.0];
    for e in [omega0 - width, omega0 - gamma, omega0 + gamma, omega0 + width] {
        if e > 0.0 && e < omega_cut {
            edges.push(e);
        }
    }
    edges.push(omega_cut);
    let (mut x2, mut v2) = (0.0, 0.0);
    for s in edges.windows(2) {
        x2 += integrate(|w| pref * w.powi(3) * susc(w), s[0], s[1], 1e-300, 1e-12)?;
        v2 += integrate(|w| pref * w.powi(5) * susc(w), s[0], s[1], 1e-300, 1e-12)?;
    }
    let p2 = m * m * v2;
    Ok(LinearResponse {
        omega_cut,
        x2,
        p2,
        energy: p2 / (2.0 * m) + 0.5 * m * omega0 * omega0 * x2,
        dx_dp: (x2 * p2).sqrt(),
        radiated: -tau * omega0 * omega0 * p2 / m,
    })
}

/// One line of the measurement/prediction comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub quantity: String,
    pub measured: f64,
    pub stderr: f64,
    pub predicted: f64,
    /// `relative` or `sigma`
    pub criterion: String,
    pub tolerance: f64,
    pub pass: bool,
}

impl ComparisonRow {
    pub fn relative(quantity: &str, measured: Estimate, predicted: f64, tolerance: f64) -> Self {
        ComparisonRow {
            quantity: quantity.into(),
            measured: measured.value,
            stderr: measured.stderr,
            predicted,
            criterion: "relative".into(),
            tolerance,
            pass: measured.relative_error(predicted) <= tolerance,
        }
    }

    pub fn sigma(quantity: &str, measured: Estimate, predicted: f64, n_sigma: f64) -> Self {
        ComparisonRow {
            quantity: quantity.into(),
            measured: measured.value,
            stderr: measured.stderr,
            predicted,
            criterion: "sigma".into(),
            tolerance: n_sigma,
            pass: measured.within_sigma(predicted, n_sigma),
        }
    }
}

/// Ground-state comparison of a balance measurement against matrix predictions.
pub fn compare_ground_state(balance: &BalanceReport, tm: &TransitionMatrix, omega_cut: f64) -> Result<Vec<ComparisonRow>> {
    let dpp = trace_dpp(tm, 0, omega_cut)?;
    let dpx = trace_dpx(tm, 0, omega_cut)?;
    let m = tm.scales.m;
    let absorbed = dpp.value / m;
    Ok(vec![
        ComparisonRow::relative("radiated", balance.radiated, -absorbed, 0.10),
        ComparisonRow::relative("absorbed", balance.absorbed, absorbed, 0.10),
        ComparisonRow::sigma("net_power", balance.net_power, 0.0, 3.0),
        ComparisonRow::sigma("net_drift", balance.net_drift, 0.0, 3.0),
        ComparisonRow::sigma("dpp", balance.dpp, dpp.value, 2.0),
        ComparisonRow::sigma("dpx", balance.dpx, dpx.total, 2.0),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::force::ForceModel;
    use crate::matrix::{diagonalize_potential, oscillator_matrices};
    use std::f64::consts::PI;

    fn osc(n: usize) -> TransitionMatrix {
        oscillator_matrices(&PhysicalScales::reference(), n).unwrap()
    }

    #[test]
    fn oscillator_decay() {
        let tm = osc(10);
        let g = predict_decay(&tm, 0).unwrap();
        assert!(g.transitions.is_empty());
        assert_eq!(g.dh_dt, 0.0);
        let e = predict_decay(&tm, 1).unwrap();
        assert_eq!(e.transitions.len(), 1);
        assert!((e.transitions[0].a_coefficient - 0.01).abs() < 1e-15);
        assert!((e.dh_dt + 0.01).abs() < 1e-15);
    }

    #[test]
    fn decay_signs_quartic() {
        let s = PhysicalScales::reference();
        let tm = diagonalize_potential(&s, &ForceModel::quartic(&s, 0.1).unwrap(), 120).unwrap();
        for n in 1..tm.trusted() {
            let d = predict_decay(&tm, n).unwrap();
            assert!(d.transitions.iter().all(|t| t.a_coefficient >= 0.0));
            assert!(d.dh_dt < 0.0);
        }
    }

    #[test]
    fn momentum_trace() {
        let tm = osc(10);
        assert!((trace_dpp(&tm, 0, 20.0).unwrap().value - 5e-3).abs() < 1e-15);
        let z = oscillator_matrices(&PhysicalScales::reference().with_tau(0.0), 10).unwrap();
        assert_eq!(trace_dpp(&z, 0, 20.0).unwrap().value, 0.0);
        // independent of the cutoff once it exceeds the transition
        assert_eq!(trace_dpp(&tm, 0, 5.0).unwrap().value, trace_dpp(&tm, 0, 50.0).unwrap().value);
        assert_eq!(trace_dpp(&tm, 3, 0.5).unwrap().dropped.len(), 2);
    }

    #[test]
    fn position_trace_closed_form() {
        let tm = osc(10);
        for wc in [20.0, 100.0] {
            let t = trace_dpx(&tm, 0, wc).unwrap();
            let exact = -(0.01 / PI) * (wc * wc / 2.0 + 0.5 * (wc * wc - 1.0f64).ln());
            assert!((t.total - exact).abs() < 1e-8 * exact.abs(), "{} vs {exact}", t.total);
            assert!((t.renormalized + (0.01 / PI) * 0.5 * (wc * wc - 1.0f64).ln()).abs() < 1e-8);
        }
        let z = oscillator_matrices(&PhysicalScales::reference().with_tau(0.0), 10).unwrap();
        assert_eq!(trace_dpx(&z, 0, 20.0).unwrap().total, 0.0);
    }

    #[test]
    fn linear_response_limits() {
        // narrow resonance, large cutoff: x² → ħ/2mω0 up to small corrections
        let s = PhysicalScales::reference().with_tau(1e-4);
        let r = harmonic_linear_response(&s, 5.0).unwrap();
        assert!((r.x2 - 0.5).abs() < 2e-3, "{}", r.x2);
        let r = harmonic_linear_response(&PhysicalScales::reference(), 20.0).unwrap();
        assert!((r.x2 - 0.50792).abs() < 1e-4, "{}", r.x2);
        assert!((r.p2 - 1.15399).abs() < 1e-4, "{}", r.p2);
        let z = harmonic_linear_response(&PhysicalScales::reference().with_tau(0.0), 20.0).unwrap();
        assert_eq!(z.x2, 0.0);
    }
}
