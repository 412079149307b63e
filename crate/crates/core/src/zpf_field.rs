//! Discrete realizations of the zero-point field's electric component in the
//! long-wavelength approximation.
//!
//! The force the field exerts on the charge is synthesized as
//! `eE(t) = Σ_α A_α cos(ω_α t + φ_α)` with equally spaced modes
//! `ω_α = α Δω` up to the cutoff and amplitudes fixed by the ω³ spectrum,
//! `A_α² / 2 = (m τ ħ / π) ω_α³ Δω`.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result, SedError};
use crate::scales::PhysicalScales;
use crate::seed::PhaseStream;
use crate::stats::{jackknife, mean_skipping, Estimate};

/// Hard limit on the number of modes a mode set may hold.
pub const DEFAULT_MAX_MODES: usize = 20_000_000;
/// Largest FFT the synthesizer is willing to plan.
const MAX_FFT_LEN: usize = 1 << 27;

/// Uniform time grid `t_j = t0 + j dt`, `j = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, len: usize) -> Self {
        TimeGrid { t0, dt, len }
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len).map(|j| self.time(j)).collect()
    }

    pub fn end(&self) -> f64 {
        self.time(self.len.saturating_sub(1))
    }
}

/// Discrete field modes and their force amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    pub scales: PhysicalScales,
    pub omega_cut: f64,
    pub delta_omega: f64,
    pub omegas: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

impl ModeSet {
    /// Mode set with spacing `delta_omega` and every mode at or below `omega_cut`.
    pub fn from_spacing(scales: PhysicalScales, omega_cut: f64, delta_omega: f64) -> Result<Self> {
        Self::from_spacing_limited(scales, omega_cut, delta_omega, DEFAULT_MAX_MODES)
    }

    pub fn from_spacing_limited(
        scales: PhysicalScales,
        omega_cut: f64,
        delta_omega: f64,
        max_modes: usize,
    ) -> Result<Self> {
        scales.validate()?;
        if !(omega_cut > 0.0 && omega_cut.is_finite()) {
            return config_err("omega_cut must be positive and finite");
        }
        if !(delta_omega > 0.0 && delta_omega.is_finite()) {
            return config_err("mode spacing must be positive and finite");
        }
        let ratio = omega_cut / delta_omega;
        if ratio > max_modes as f64 {
            return Err(SedError::Resource(format!(
                "{} modes requested, limit is {max_modes}",
                ratio.floor()
            )));
        }
        let mut n = (ratio * (1.0 + 1e-12)).floor() as usize;
        while n > 0 && n as f64 * delta_omega > omega_cut * (1.0 + 1e-12) {
            n -= 1;
        }
        let pref = scales.spectral_prefactor();
        let omegas: Vec<f64> = (1..=n).map(|a| a as f64 * delta_omega).collect();
        let amplitudes = omegas
            .iter()
            .map(|&w| (2.0 * pref * w * w * w * delta_omega).sqrt())
            .collect();
        Ok(ModeSet { scales, omega_cut, delta_omega, omegas, amplitudes })
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Total force variance `Σ A_α² / 2` carried by the modes.
    pub fn variance(&self) -> f64 {
        self.amplitudes.iter().map(|a| 0.5 * a * a).sum()
    }

    /// Force variance carried by modes with `ω_α ≤ w`.
    pub fn variance_below(&self, w: f64) -> f64 {
        self.omegas
            .iter()
            .zip(&self.amplitudes)
            .take_while(|(o, _)| **o <= w)
            .map(|(_, a)| 0.5 * a * a)
            .sum()
    }
}

/// Build the mode set for a simulation window of length `total_time`.
///
/// The spacing is `Δω = 2π / (oversample · total_time)`, so the field does
/// not repeat inside the window.
pub fn build_mode_set(
    scales: PhysicalScales,
    omega_cut: f64,
    total_time: f64,
    oversample: f64,
) -> Result<ModeSet> {
    build_mode_set_limited(scales, omega_cut, total_time, oversample, DEFAULT_MAX_MODES)
}

pub fn build_mode_set_limited(
    scales: PhysicalScales,
    omega_cut: f64,
    total_time: f64,
    oversample: f64,
    max_modes: usize,
) -> Result<ModeSet> {
    scales.validate()?;
    if !(omega_cut > scales.omega0) {
        return config_err(format!(
            "omega_cut = {omega_cut} must exceed omega0 = {}",
            scales.omega0
        ));
    }
    if !(total_time > 0.0 && total_time.is_finite()) {
        return config_err("total_time must be positive and finite");
    }
    if !(oversample >= 1.0 && oversample.is_finite()) {
        return config_err("oversample factor must be >= 1");
    }
    let delta_omega = 2.0 * PI / (oversample * total_time);
    ModeSet::from_spacing_limited(scales, omega_cut, delta_omega, max_modes)
}

/// One member of the statistical ensemble: a mode set plus one draw of phases.
#[derive(Debug, Clone, PartialEq)]
pub struct ZpfRealization {
    pub mode_set: Arc<ModeSet>,
    pub phases: Vec<f64>,
    pub seed: u64,
}

/// Draw i.i.d. uniform phases on `(-π, π]`; mode `α` (1-based) uses counter `α`.
pub fn sample_realization(mode_set: Arc<ModeSet>, seed: u64) -> ZpfRealization {
    let mut stream = PhaseStream::new(seed);
    let phases = (1..=mode_set.len() as u64).map(|a| stream.phase(a)).collect();
    ZpfRealization { mode_set, phases, seed }
}

impl ZpfRealization {
    /// Field force at a single instant by direct summation.
    pub fn eval(&self, t: f64) -> f64 {
        self.mode_set
            .omegas
            .iter()
            .zip(&self.mode_set.amplitudes)
            .zip(&self.phases)
            .map(|((w, a), p)| a * (w * t + p).cos())
            .sum()
    }

    pub fn to_document(&self) -> RealizationDocument {
        RealizationDocument {
            scales: self.mode_set.scales,
            omega_cut: self.mode_set.omega_cut,
            delta_omega: self.mode_set.delta_omega,
            seed: self.seed,
        }
    }
}

/// JSON form of a realization; phases are regenerated from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationDocument {
    pub scales: PhysicalScales,
    pub omega_cut: f64,
    pub delta_omega: f64,
    pub seed: u64,
}

impl RealizationDocument {
    pub fn realize(&self) -> Result<ZpfRealization> {
        let ms = ModeSet::from_spacing(self.scales, self.omega_cut, self.delta_omega)?;
        Ok(sample_realization(Arc::new(ms), self.seed))
    }
}

/// Evaluate `eE(t_j)` on a uniform grid.
///
/// When the grid step and the mode spacing satisfy `Δω · dt · K = 2π` for an
/// integer `K`, the sum is an inverse DFT of length `K` and is computed with
/// one FFT. Otherwise a phasor recurrence with periodic re-anchoring and
/// compensated accumulation is used.
pub fn eval_field_grid(realization: &ZpfRealization, grid: &TimeGrid) -> Result<Vec<f64>> {
    let ms = &realization.mode_set;
    if grid.len == 0 {
        return Ok(Vec::new());
    }
    if !(grid.dt > 0.0) {
        return config_err("time grid step must be positive");
    }
    if grid.dt * ms.omega_cut > PI * (1.0 + 1e-12) {
        return config_err(format!(
            "grid step {} violates the Nyquist condition dt * omega_cut <= pi (omega_cut = {})",
            grid.dt, ms.omega_cut
        ));
    }
    if ms.is_empty() {
        return Ok(vec![0.0; grid.len]);
    }
    match fft_length(ms.delta_omega, grid.dt) {
        Some(k) => Ok(synthesize_fft(realization, grid, k)),
        None => Ok(synthesize_phasor(realization, grid)),
    }
}

fn fft_length(delta_omega: f64, dt: f64) -> Option<usize> {
    let k = 2.0 * PI / (delta_omega * dt);
    let kr = k.round();
    if kr >= 1.0 && kr <= MAX_FFT_LEN as f64 && (k - kr).abs() <= 1e-9 * kr {
        Some(kr as usize)
    } else {
        None
    }
}

fn synthesize_fft(realization: &ZpfRealization, grid: &TimeGrid, k: usize) -> Vec<f64> {
    let ms = &realization.mode_set;
    let mut buf = vec![Complex64::new(0.0, 0.0); k];
    for (alpha, ((w, a), p)) in ms.omegas.iter().zip(&ms.amplitudes).zip(&realization.phases).enumerate() {
        // mode index alpha+1 wraps exactly because Δω dt K = 2π
        let theta = p + w * grid.t0;
        buf[(alpha + 1) % k] += Complex64::from_polar(*a, theta);
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(k).process(&mut buf);
    (0..grid.len).map(|j| buf[j % k].re).collect()
}

fn synthesize_phasor(realization: &ZpfRealization, grid: &TimeGrid) -> Vec<f64> {
    const ANCHOR: usize = 64;
    let ms = &realization.mode_set;
    let mut sum = vec![0.0f64; grid.len];
    let mut comp = vec![0.0f64; grid.len];
    for ((w, a), p) in ms.omegas.iter().zip(&ms.amplitudes).zip(&realization.phases) {
        let step = Complex64::from_polar(1.0, w * grid.dt);
        let mut z = Complex64::new(0.0, 0.0);
        for j in 0..grid.len {
            if j % ANCHOR == 0 {
                z = Complex64::from_polar(*a, w * grid.time(j) + p);
            } else {
                z *= step;
            }
            // Neumaier summation
            let v = z.re;
            let s = sum[j] + v;
            if sum[j].abs() >= v.abs() {
                comp[j] += (sum[j] - s) + v;
            } else {
                comp[j] += (v - s) + sum[j];
            }
            sum[j] = s;
        }
    }
    sum.iter().zip(&comp).map(|(s, c)| s + c).collect()
}

/// `∫₀^W ω³ cos(ω u) dω`, closed form with a series branch near `u = 0`.
pub fn cubic_cosine_integral(w: f64, u: f64) -> f64 {
    let z = w * u;
    if z.abs() < 2.0 {
        let z2 = z * z;
        let mut term = 1.0; // (-1)^k z^{2k} / (2k)!
        let mut total = 0.0;
        for k in 0..40 {
            total += term / (2 * k + 4) as f64;
            term *= -z2 / ((2 * k + 1) * (2 * k + 2)) as f64;
            if term.abs() < 1e-18 {
                break;
            }
        }
        return w.powi(4) * total;
    }
    let (s, c) = z.sin_cos();
    let u2 = u * u;
    let u4 = u2 * u2;
    w * w * w * s / u + 3.0 * w * w * c / u2 - 6.0 * w * s / (u2 * u) + 6.0 * (1.0 - c) / u4
}

/// Continuum force correlation `e²φ(Δ) = (m τ ħ / π) ∫₀^{ω_c} ω³ cos(ωΔ) dω`.
pub fn theoretical_force_correlation(delta_t: f64, scales: &PhysicalScales, omega_cut: f64) -> Result<f64> {
    if !(omega_cut > 0.0) {
        return config_err("omega_cut must be positive");
    }
    Ok(scales.spectral_prefactor() * cubic_cosine_integral(omega_cut, delta_t))
}

/// One point of an empirical correlation curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    pub lag: f64,
    pub estimate: Estimate,
}

/// Ensemble-and-time averaged `⟨eE(t) eE(t+Δ)⟩` over the window `grid`.
///
/// Every lag must be a non-negative integer multiple of `grid.dt`. Errors are
/// delete-one jackknife over realizations.
pub fn empirical_correlation(
    realizations: &[ZpfRealization],
    lags: &[f64],
    grid: &TimeGrid,
) -> Result<Vec<CorrelationPoint>> {
    if realizations.len() < 2 {
        return Err(SedError::Statistical(
            "at least two realizations are needed for an error bar".into(),
        ));
    }
    if grid.len == 0 {
        return config_err("empty averaging window");
    }
    let shifts = lags
        .iter()
        .map(|&lag| {
            let k = lag / grid.dt;
            let kr = k.round();
            if lag < 0.0 || (k - kr).abs() > 1e-9 * kr.max(1.0) {
                config_err(format!("lag {lag} is not a non-negative multiple of dt = {}", grid.dt))
            } else {
                Ok(kr as usize)
            }
        })
        .collect::<Result<Vec<usize>>>()?;
    let max_shift = shifts.iter().copied().max().unwrap_or(0);
    let extended = TimeGrid::new(grid.t0, grid.dt, grid.len + max_shift);

    let per_real: Vec<Vec<f64>> = realizations
        .par_iter()
        .map(|r| {
            let y = eval_field_grid(r, &extended)?;
            Ok(shifts
                .iter()
                .map(|&k| (0..grid.len).map(|j| y[j] * y[j + k]).sum::<f64>() / grid.len as f64)
                .collect())
        })
        .collect::<Result<_>>()?;

    Ok(lags
        .iter()
        .enumerate()
        .map(|(li, &lag)| {
            let samples: Vec<f64> = per_real.iter().map(|v| v[li]).collect();
            let est = jackknife(samples.len(), |skip| mean_skipping(&samples, skip));
            CorrelationPoint { lag, estimate: est }
        })
        .collect())
}

/// Write `lag,theoretical,empirical,stderr` rows.
pub fn write_correlation_csv<W: Write>(
    out: W,
    points: &[CorrelationPoint],
    scales: &PhysicalScales,
    omega_cut: f64,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lag", "theoretical", "empirical", "stderr"])?;
    for p in points {
        let th = theoretical_force_correlation(p.lag, scales, omega_cut)?;
        w.write_record([
            p.lag.to_string(),
            th.to_string(),
            p.estimate.value.to_string(),
            p.estimate.stderr.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
