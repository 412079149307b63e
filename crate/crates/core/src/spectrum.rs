//! Averaged periodograms and line-shape summaries.
//!
//! Densities are one-sided in angular frequency and normalized so that
//! `Σ_k S(ω_k) Δω = mean(x²)` over the analysed window (Parseval), zero
//! padding included.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SedError};
use crate::stats::{Estimate, Welford};

/// Reusable one-sided periodogram of fixed length.
pub struct Periodogram {
    len: usize,
    padded: usize,
    dt: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl Periodogram {
    /// Periodogram of `len` samples at spacing `dt`, zero padded by `pad_factor`.
    pub fn new(len: usize, dt: f64, pad_factor: usize) -> Self {
        let padded = (len * pad_factor.max(1)).max(2);
        let fft = FftPlanner::<f64>::new().plan_fft_forward(padded);
        Periodogram { len, padded, dt, fft }
    }

    pub fn bins(&self) -> usize {
        self.padded / 2 + 1
    }

    /// Bin spacing of the padded transform.
    pub fn delta_omega(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.padded as f64 * self.dt)
    }

    pub fn omegas(&self) -> Vec<f64> {
        let dw = self.delta_omega();
        (0..self.bins()).map(|k| k as f64 * dw).collect()
    }

    /// Intrinsic resolution `2π / (len · dt)` of the window.
    pub fn resolution(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.len as f64 * self.dt)
    }

    pub fn density(&self, series: &[f64]) -> Vec<f64> {
        assert_eq!(series.len(), self.len, "series length must match the periodogram");
        let mut buf: Vec<Complex64> = series.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        buf.resize(self.padded, Complex64::new(0.0, 0.0));
        self.fft.process(&mut buf);
        let norm = self.dt / (2.0 * std::f64::consts::PI * self.len as f64);
        let nyq = self.padded / 2;
        (0..=nyq)
            .map(|k| {
                let two_sided = buf[k].norm_sqr() * norm;
                if k == 0 || (k == nyq && self.padded % 2 == 0) {
                    two_sided
                } else {
                    2.0 * two_sided
                }
            })
            .collect()
    }
}

/// Periodogram averaged over an ensemble, with per-bin standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedSpectrum {
    pub omegas: Vec<f64>,
    pub density: Vec<Estimate>,
    /// `2π / window`
    pub resolution: f64,
    pub window: (f64, f64),
    pub n_series: usize,
}

/// Ordered accumulator for [`AveragedSpectrum`].
#[derive(Debug, Clone)]
pub struct SpectrumAccumulator {
    bins: Vec<Welford>,
}

impl SpectrumAccumulator {
    pub fn new(bins: usize) -> Self {
        SpectrumAccumulator { bins: vec![Welford::default(); bins] }
    }

    pub fn push(&mut self, density: &[f64]) {
        for (w, v) in self.bins.iter_mut().zip(density) {
            w.push(*v);
        }
    }

    pub fn finish(&self, omegas: Vec<f64>, resolution: f64, window: (f64, f64)) -> AveragedSpectrum {
        AveragedSpectrum {
            omegas,
            density: self.bins.iter().map(|w| w.estimate()).collect(),
            resolution,
            window,
            n_series: self.bins.first().map(|w| w.n as usize).unwrap_or(0),
        }
    }
}

/// Peak position, width and area of a spectral line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineShape {
    pub peak_omega: f64,
    pub peak_density: f64,
    pub fwhm: f64,
    pub integral: f64,
    pub resolution: f64,
}

/// Locate the maximum of `density` above `omega_min` and measure its full
/// width at half maximum by linear interpolation between bins.
pub fn line_shape(omegas: &[f64], density: &[f64], omega_min: f64, resolution: f64) -> Result<LineShape> {
    let dw = if omegas.len() > 1 { omegas[1] - omegas[0] } else { 0.0 };
    let integral = density.iter().sum::<f64>() * dw;
    let (ip, &peak) = density
        .iter()
        .enumerate()
        .filter(|(k, _)| omegas[*k] >= omega_min)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| SedError::Numerical("empty spectrum".into()))?;
    let half = 0.5 * peak;
    let mut lo = ip;
    while lo > 0 && density[lo] > half {
        lo -= 1;
    }
    let mut hi = ip;
    while hi + 1 < density.len() && density[hi] > half {
        hi += 1;
    }
    if density[lo] > half || density[hi] > half {
        return Err(SedError::Numerical("line does not fall to half maximum inside the spectrum".into()));
    }
    let cross = |a: usize, b: usize| {
        let (da, db) = (density[a], density[b]);
        omegas[a] + (half - da) / (db - da) * (omegas[b] - omegas[a])
    };
    let left = cross(lo, lo + 1);
    let right = cross(hi - 1, hi);
    // parabolic refinement of the peak position
    let peak_omega = if ip > 0 && ip + 1 < density.len() {
        let (a, b, c) = (density[ip - 1], density[ip], density[ip + 1]);
        let denom = a - 2.0 * b + c;
        if denom != 0.0 { omegas[ip] + 0.5 * (a - c) / denom * dw } else { omegas[ip] }
    } else {
        omegas[ip]
    };
    Ok(LineShape { peak_omega, peak_density: peak, fwhm: right - left, integral, resolution })
}
