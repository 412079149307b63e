//! Equation of motion with order-reduced radiation reaction,
//!
//! ```text
//! m ẍ = f(x) + τ f'(x) ẋ + eE(t),
//! ```
//!
//! integrated with classical fixed-step RK4, plus the perturbative hierarchy
//! in powers of the field coupling.

use std::io::Write;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result, SedError};
use crate::force::ForceModel;
use crate::scales::PhysicalScales;
use crate::zpf_field::{eval_field_grid, RealizationDocument, TimeGrid, ZpfRealization};

/// Largest allowed `dt * omega_cut`.
pub const MAX_DT_OMEGA_CUT: f64 = 0.35;
/// Largest allowed `dt * omega0`.
pub const MAX_DT_OMEGA0: f64 = 0.05;

/// Number of RK4 steps covering `t_span` with step `dt`.
pub fn step_count(t_span: (f64, f64), dt: f64) -> Result<usize> {
    let (t0, t1) = t_span;
    if !(dt > 0.0) || !(t1 > t0) {
        return config_err("time span must be increasing and dt positive");
    }
    let n = (t1 - t0) / dt;
    let nr = n.round();
    if (n - nr).abs() > 1e-6 * nr.max(1.0) {
        return config_err(format!("time span {} is not a whole number of steps of {dt}", t1 - t0));
    }
    Ok(nr as usize)
}

/// Provenance stored with every trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub scales: PhysicalScales,
    pub force: ForceModel,
    pub field: Option<RealizationDocument>,
    pub x0: f64,
    pub p0: f64,
}

/// Time series from one integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub t0: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub drive: Vec<f64>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    /// `H = p²/2m + V(x)` along the trajectory.
    pub fn energy(&self) -> Vec<f64> {
        let m = self.meta.scales.m;
        self.x
            .iter()
            .zip(&self.p)
            .map(|(x, p)| p * p / (2.0 * m) + self.meta.force.potential(*x))
            .collect()
    }

    /// CSV with columns `t,x,p,drive`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "p", "drive"])?;
        for j in 0..self.len() {
            w.write_record([
                self.time(j).to_string(),
                self.x[j].to_string(),
                self.p[j].to_string(),
                self.drive[j].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One integration step's output handed to observers.
#[derive(Debug, Clone, Copy)]
pub struct StepSample {
    pub step: usize,
    pub t: f64,
    pub x: f64,
    pub p: f64,
    pub drive: f64,
}

fn check_steps(scales: &PhysicalScales, field: Option<&ZpfRealization>, dt: f64) -> Result<()> {
    if dt * scales.omega0 > MAX_DT_OMEGA0 * (1.0 + 1e-12) {
        return config_err(format!("dt * omega0 = {} exceeds {MAX_DT_OMEGA0}", dt * scales.omega0));
    }
    if let Some(r) = field {
        let wc = r.mode_set.omega_cut;
        if dt * wc > MAX_DT_OMEGA_CUT * (1.0 + 1e-12) {
            return config_err(format!("dt * omega_cut = {} exceeds {MAX_DT_OMEGA_CUT}", dt * wc));
        }
    }
    Ok(())
}

/// Drive samples on the half-step grid `t0 + j dt/2`, `j = 0..=2n`.
pub fn half_step_drive(field: Option<&ZpfRealization>, t0: f64, dt: f64, n_steps: usize) -> Result<Vec<f64>> {
    let len = 2 * n_steps + 1;
    match field {
        Some(r) => eval_field_grid(r, &TimeGrid::new(t0, 0.5 * dt, len)),
        None => Ok(vec![0.0; len]),
    }
}

/// Integrate and hand every full step (including the initial state) to
/// `observe`. The field is synthesized once on the half-step grid.
#[allow(clippy::too_many_arguments)]
pub fn integrate_with<F: FnMut(StepSample)>(
    scales: &PhysicalScales,
    force: &ForceModel,
    field: Option<&ZpfRealization>,
    x0: f64,
    p0: f64,
    t_span: (f64, f64),
    dt: f64,
    mut observe: F,
) -> Result<()> {
    scales.validate()?;
    check_steps(scales, field, dt)?;
    let n = step_count(t_span, dt)?;
    let drive = half_step_drive(field, t_span.0, dt, n)?;
    integrate_on_drive(scales, force, &drive, x0, p0, t_span.0, dt, n, &mut observe)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn integrate_on_drive<F: FnMut(StepSample)>(
    scales: &PhysicalScales,
    force: &ForceModel,
    drive: &[f64],
    x0: f64,
    p0: f64,
    t0: f64,
    dt: f64,
    n: usize,
    observe: &mut F,
) -> Result<()> {
    let m = scales.m;
    let tau = scales.tau;
    let inv_m = 1.0 / m;
    let accel = |x: f64, v: f64, e: f64| {
        let (f, df) = force.eval2(x);
        (f + tau * df * v + e) * inv_m
    };
    let mut x = x0;
    let mut v = p0 * inv_m;
    observe(StepSample { step: 0, t: t0, x, p: m * v, drive: drive[0] });
    for i in 0..n {
        let (e0, eh, e1) = (drive[2 * i], drive[2 * i + 1], drive[2 * i + 2]);
        let k1x = v;
        let k1v = accel(x, v, e0);
        let x2 = x + 0.5 * dt * k1x;
        let v2 = v + 0.5 * dt * k1v;
        let k2x = v2;
        let k2v = accel(x2, v2, eh);
        let x3 = x + 0.5 * dt * k2x;
        let v3 = v + 0.5 * dt * k2v;
        let k3x = v3;
        let k3v = accel(x3, v3, eh);
        let x4 = x + dt * k3x;
        let v4 = v + dt * k3v;
        let k4x = v4;
        let k4v = accel(x4, v4, e1);
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        let t = t0 + (i + 1) as f64 * dt;
        if !(x.is_finite() && v.is_finite()) {
            return Err(SedError::Diverged { t });
        }
        if x.abs() > force.escape_radius {
            return Err(SedError::Escaped { t, x });
        }
        observe(StepSample { step: i + 1, t, x, p: m * v, drive: e1 });
    }
    Ok(())
}

/// Integrate one trajectory; with `field = None` the drive is zero.
pub fn integrate_trajectory(
    scales: &PhysicalScales,
    force: &ForceModel,
    field: Option<&ZpfRealization>,
    x0: f64,
    p0: f64,
    t_span: (f64, f64),
    dt: f64,
) -> Result<Trajectory> {
    let cap = step_count(t_span, dt).map(|n| n + 1).unwrap_or(0);
    let mut xs = Vec::with_capacity(cap);
    let mut ps = Vec::with_capacity(cap);
    let mut es = Vec::with_capacity(cap);
    integrate_with(scales, force, field, x0, p0, t_span, dt, |s| {
        xs.push(s.x);
        ps.push(s.p);
        es.push(s.drive);
    })?;
    Ok(Trajectory {
        dt,
        t0: t_span.0,
        x: xs,
        p: ps,
        drive: es,
        meta: TrajectoryMeta {
            scales: *scales,
            force: force.clone(),
            field: field.map(|r| r.to_document()),
            x0,
            p0,
        },
    })
}

/// Deterministic, field-free motion (lowest order of the hierarchy).
pub fn zeroth_order(
    scales: &PhysicalScales,
    force: &ForceModel,
    x0: f64,
    p0: f64,
    t_span: (f64, f64),
    dt: f64,
) -> Result<Trajectory> {
    integrate_trajectory(scales, force, None, x0, p0, t_span, dt)
}

/// Which linearized propagator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreensKind {
    /// Dissipation-free: `m G'' = f'(x_eq) G`.
    Bare,
    /// Includes the linearized radiation reaction `τ f'(x_eq) G'`.
    Damped,
}

/// Retarded Green function of the motion linearized about the stable
/// equilibrium, `G(0) = 0`, `G'(0⁺) = 1/m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreensFunction {
    pub kind: GreensKind,
    pub m: f64,
    pub equilibrium: f64,
    /// `sqrt(-f'(x_eq) / m)`
    pub omega_eff: f64,
    /// Energy damping rate `-τ f'(x_eq) / m` (zero for the bare kernel).
    pub gamma: f64,
    /// Oscillation frequency `sqrt(omega_eff² - gamma²/4)`.
    pub omega1: f64,
}

/// Green function of the force linearized about its (unique) stable equilibrium.
///
/// The linearization has constant coefficients, so the kernel is the damped
/// or undamped oscillator propagator with the effective frequency
/// `sqrt(-f'(x_eq)/m)`. Multi-well forces are rejected.
pub fn greens_function(scales: &PhysicalScales, force: &ForceModel, kind: GreensKind) -> Result<GreensFunction> {
    let xeq = force.unique_equilibrium()?;
    let k = -force.d1(xeq);
    if !(k > 0.0) {
        return config_err("equilibrium is not strictly stable");
    }
    let m = scales.m;
    let omega_eff = (k / m).sqrt();
    let gamma = match kind {
        GreensKind::Bare => 0.0,
        GreensKind::Damped => scales.tau * k / m,
    };
    let w1sq = omega_eff * omega_eff - 0.25 * gamma * gamma;
    if !(w1sq > 0.0) {
        return config_err("linearized motion is overdamped");
    }
    Ok(GreensFunction { kind, m, equilibrium: xeq, omega_eff, gamma, omega1: w1sq.sqrt() })
}

impl GreensFunction {
    pub fn value(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        (-0.5 * self.gamma * u).exp() * (self.omega1 * u).sin() / (self.m * self.omega1)
    }

    /// `∂G/∂u`; at `u = 0⁺` this is `1/m`.
    pub fn derivative(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 0.0;
        }
        let (s, c) = (self.omega1 * u).sin_cos();
        (-0.5 * self.gamma * u).exp() * (c - 0.5 * self.gamma / self.omega1 * s) / self.m
    }
}

/// Trapezoid-rule causal convolution `y_j = h Σ'_{i≤j} k_{j-i} s_i`.
fn causal_trapezoid(kernel: &[f64], source: &[f64], h: f64) -> Vec<f64> {
    let n = source.len();
    let full = convolve(kernel, source);
    (0..n)
        .map(|j| h * (full[j] - 0.5 * (kernel[j] * source[0] + kernel[0] * source[j])))
        .collect()
}

/// Linear convolution truncated to `source.len()` samples.
fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    if n <= 512 {
        return (0..n).map(|j| (0..=j).map(|i| a[j - i] * b[i]).sum()).collect();
    }
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut fa: Vec<Complex64> = a[..n].iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fa.resize(size, Complex64::new(0.0, 0.0));
    let mut fb: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fb.resize(size, Complex64::new(0.0, 0.0));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    fa[..n].iter().map(|c| c.re / size as f64).collect()
}

/// First-order (field-linear) response about equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrder {
    pub grid: TimeGrid,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

/// `x¹(t) = ∫_{t0}^t G(t−s) eE(s) ds` and `p¹ = m dx¹/dt` on `grid`, by the
/// trapezoid rule on the field samples. The lower limit is `grid.t0`.
pub fn first_order_response(
    greens: &GreensFunction,
    realization: &ZpfRealization,
    grid: &TimeGrid,
) -> Result<FirstOrder> {
    let period = 2.0 * std::f64::consts::PI / realization.mode_set.delta_omega;
    if grid.len > 1 && grid.end() - grid.t0 > period * (1.0 + 1e-12) {
        return config_err(format!(
            "grid spans {} but the realization repeats after {period}",
            grid.end() - grid.t0
        ));
    }
    let field = eval_field_grid(realization, grid)?;
    let g: Vec<f64> = (0..grid.len).map(|j| greens.value(j as f64 * grid.dt)).collect();
    let gp: Vec<f64> = (0..grid.len).map(|j| greens.derivative(j as f64 * grid.dt)).collect();
    let x = causal_trapezoid(&g, &field, grid.dt);
    let p = causal_trapezoid(&gp, &field, grid.dt).into_iter().map(|v| greens.m * v).collect();
    Ok(FirstOrder { grid: *grid, x, p })
}

/// `x²(t) = ∫ G(t−s) ½ f''(x⁰(s)) [x¹(s)]² ds` on `grid`.
pub fn second_order_response(
    greens: &GreensFunction,
    force: &ForceModel,
    x_zero: &[f64],
    x_one: &[f64],
    grid: &TimeGrid,
) -> Result<Vec<f64>> {
    if x_zero.len() != grid.len || x_one.len() != grid.len {
        return config_err(format!(
            "inputs of length {} and {} do not match the grid length {}",
            x_zero.len(),
            x_one.len(),
            grid.len
        ));
    }
    let source: Vec<f64> = x_zero
        .iter()
        .zip(x_one)
        .map(|(x0, x1)| 0.5 * force.d2(*x0) * x1 * x1)
        .collect();
    if source.iter().all(|s| *s == 0.0) {
        return Ok(vec![0.0; grid.len]);
    }
    let g: Vec<f64> = (0..grid.len).map(|j| greens.value(j as f64 * grid.dt)).collect();
    Ok(causal_trapezoid(&g, &source, grid.dt))
}

/// Terms of the perturbative expansion on the full-step grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyTerms {
    pub t0: f64,
    pub dt: f64,
    pub x: [Vec<f64>; 3],
    pub p: [Vec<f64>; 3],
}

impl HierarchyTerms {
    /// `x⁰ + x¹ + x²` at each step.
    pub fn sum(&self) -> Vec<f64> {
        (0..self.x[0].len()).map(|j| self.x[0][j] + self.x[1][j] + self.x[2][j]).collect()
    }
}

/// Integrate the hierarchy to second order in the field, linearized along the
/// actual zeroth-order motion `x⁰(t)` (not about equilibrium):
///
/// ```text
/// m ẍ⁰ = f(x⁰) + τ f'(x⁰) ẋ⁰
/// m ẍ¹ = f'(x⁰) x¹ + τ [f''(x⁰) x¹ ẋ⁰ + f'(x⁰) ẋ¹] + eE
/// m ẍ² = f'(x⁰) x² + ½ f''(x⁰) x¹² + τ [f''(x⁰)(x² ẋ⁰ + x¹ ẋ¹) + ½ f'''(x⁰) x¹² ẋ⁰ + f'(x⁰) ẋ²]
/// ```
///
/// The three levels are stepped together with the same RK4 scheme and
/// half-step field samples as the full integrator.
pub fn perturbative_hierarchy(
    scales: &PhysicalScales,
    force: &ForceModel,
    realization: &ZpfRealization,
    x0: f64,
    p0: f64,
    t_span: (f64, f64),
    dt: f64,
) -> Result<HierarchyTerms> {
    scales.validate()?;
    check_steps(scales, Some(realization), dt)?;
    let n = step_count(t_span, dt)?;
    let drive = half_step_drive(Some(realization), t_span.0, dt, n)?;
    let (m, tau) = (scales.m, scales.tau);
    // state: [x0, v0, x1, v1, x2, v2]
    let rhs = |s: &[f64; 6], e: f64| -> [f64; 6] {
        let (f, f1, f2, f3) = (force.force(s[0]), force.d1(s[0]), force.d2(s[0]), force.d3(s[0]));
        let a0 = (f + tau * f1 * s[1]) / m;
        let a1 = (f1 * s[2] + tau * (f2 * s[2] * s[1] + f1 * s[3]) + e) / m;
        let a2 = (f1 * s[4]
            + 0.5 * f2 * s[2] * s[2]
            + tau * (f2 * (s[4] * s[1] + s[2] * s[3]) + 0.5 * f3 * s[2] * s[2] * s[1] + f1 * s[5]))
            / m;
        [s[1], a0, s[3], a1, s[5], a2]
    };
    let axpy = |s: &[f64; 6], k: &[f64; 6], h: f64| -> [f64; 6] {
        std::array::from_fn(|i| s[i] + h * k[i])
    };
    let mut s = [x0, p0 / m, 0.0, 0.0, 0.0, 0.0];
    let mut xs: [Vec<f64>; 3] = Default::default();
    let mut ps: [Vec<f64>; 3] = Default::default();
    let mut record = |s: &[f64; 6]| {
        for l in 0..3 {
            xs[l].push(s[2 * l]);
            ps[l].push(m * s[2 * l + 1]);
        }
    };
    record(&s);
    for i in 0..n {
        let k1 = rhs(&s, drive[2 * i]);
        let k2 = rhs(&axpy(&s, &k1, 0.5 * dt), drive[2 * i + 1]);
        let k3 = rhs(&axpy(&s, &k2, 0.5 * dt), drive[2 * i + 1]);
        let k4 = rhs(&axpy(&s, &k3, dt), drive[2 * i + 2]);
        s = std::array::from_fn(|j| s[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]));
        if s.iter().any(|v| !v.is_finite()) {
            return Err(SedError::Diverged { t: t_span.0 + (i + 1) as f64 * dt });
        }
        record(&s);
    }
    Ok(HierarchyTerms { t0: t_span.0, dt, x: xs, p: ps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zpf_field::{build_mode_set, sample_realization};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn reference_field(total: f64, seed: u64) -> ZpfRealization {
        let ms = build_mode_set(PhysicalScales::reference(), 20.0, total, 1.0).unwrap();
        sample_realization(Arc::new(ms), seed)
    }

    #[test]
    fn undamped_oscillator_returns_after_one_period() {
        let s = PhysicalScales::reference().with_tau(0.0);
        let f = ForceModel::harmonic(&s);
        let n = 1000;
        let dt = 2.0 * PI / n as f64;
        let tr = integrate_trajectory(&s, &f, None, 1.0, 0.0, (0.0, 2.0 * PI), dt).unwrap();
        assert_eq!(tr.len(), n + 1);
        assert!((tr.x[n] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fourth_order_convergence() {
        let s = PhysicalScales::reference().with_tau(0.0);
        let f = ForceModel::harmonic(&s);
        let err = |n: usize| {
            let dt = 2.0 * PI / n as f64;
            let tr = integrate_trajectory(&s, &f, None, 1.0, 0.0, (0.0, 2.0 * PI), dt).unwrap();
            (tr.x[n] - 1.0).abs()
        };
        let (e1, e2) = (err(130), err(260));
        assert!(e1 / e2 >= 14.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn damped_envelope_matches_homogeneous_decay() {
        let s = PhysicalScales::reference();
        let f = ForceModel::harmonic(&s);
        let tr = zeroth_order(&s, &f, 1.0, 0.0, (0.0, 210.0), 0.0125).unwrap();
        // amplitude sqrt(x² + p²) for unit frequency
        let j = (200.0 / 0.0125) as usize;
        let amp = (tr.x[j].powi(2) + tr.p[j].powi(2)).sqrt();
        assert!((amp - (-1.0f64).exp()).abs() < 5e-3, "amp {amp}");
    }

    #[test]
    fn zeroth_order_is_integrate_without_field() {
        let s = PhysicalScales::reference();
        let f = ForceModel::quartic(&s, 0.1).unwrap();
        let a = zeroth_order(&s, &f, 1.0, 0.2, (0.0, 20.0), 0.01).unwrap();
        let b = integrate_trajectory(&s, &f, None, 1.0, 0.2, (0.0, 20.0), 0.01).unwrap();
        assert_eq!(a, b);
        let rest = zeroth_order(&s, &f, 0.0, 0.0, (0.0, 20.0), 0.01).unwrap();
        assert!(rest.x.iter().chain(&rest.p).all(|v| *v == 0.0));
    }

    #[test]
    fn quartic_energy_decays_monotonically() {
        let s = PhysicalScales::reference();
        let f = ForceModel::quartic(&s, 0.1).unwrap();
        let tr = zeroth_order(&s, &f, 1.0, 0.0, (0.0, 100.0), 0.01).unwrap();
        let h = tr.energy();
        // dH/dt = τ f'(x) ẋ² <= 0
        assert!(h.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(h.last().unwrap() < &(0.9 * h[0]));
    }

    #[test]
    fn step_limits_enforced() {
        let s = PhysicalScales::reference();
        let f = ForceModel::harmonic(&s);
        let r = reference_field(100.0, 1);
        assert!(matches!(
            integrate_trajectory(&s, &f, Some(&r), 0.0, 0.0, (0.0, 10.0), 0.02),
            Err(SedError::Config(_))
        ));
        assert!(matches!(
            integrate_trajectory(&s, &f, None, 0.0, 0.0, (0.0, 10.0), 0.1),
            Err(SedError::Config(_))
        ));
    }

    #[test]
    fn escape_detected() {
        let s = PhysicalScales::reference();
        let f = ForceModel::harmonic(&s).with_escape_radius(0.5);
        let err = integrate_trajectory(&s, &f, None, 1.0, 0.0, (0.0, 1.0), 0.01).unwrap_err();
        assert!(matches!(err, SedError::Escaped { .. }));
    }

    #[test]
    fn greens_identities() {
        let s = PhysicalScales::reference();
        for f in [ForceModel::harmonic(&s), ForceModel::quartic(&s, 0.1).unwrap()] {
            for kind in [GreensKind::Bare, GreensKind::Damped] {
                let g = greens_function(&s, &f, kind).unwrap();
                assert_eq!(g.value(0.0), 0.0);
                let h = 1e-7;
                assert!(((g.value(h) - g.value(0.0)) / h - 1.0 / s.m).abs() < 1e-6);
                assert!((g.derivative(0.0) - 1.0 / s.m).abs() < 1e-15);
            }
        }
        let bare = greens_function(&s, &ForceModel::harmonic(&s), GreensKind::Bare).unwrap();
        assert!((bare.value(PI / 2.0) - 1.0).abs() < 1e-15);
        let dw = ForceModel::polynomial(vec![0.0, 1.0, 0.0, -1.0]).unwrap();
        assert!(greens_function(&s, &dw, GreensKind::Bare).is_err());
    }

    #[test]
    fn greens_function_solves_linearized_equation() {
        let s = PhysicalScales::reference();
        let f = ForceModel::harmonic(&s);
        let g = greens_function(&s, &f, GreensKind::Damped).unwrap();
        let k = -f.d1(0.0);
        let h = 1e-4;
        for &u in &[0.5, 3.0, 17.0] {
            let g2 = (g.value(u + h) - 2.0 * g.value(u) + g.value(u - h)) / (h * h);
            let resid = s.m * g2 + k * g.value(u) + s.tau * k * g.derivative(u);
            assert!(resid.abs() < 1e-6, "residual {resid}");
        }
    }

    #[test]
    fn zero_field_gives_zero_response() {
        let s0 = PhysicalScales::reference().with_tau(0.0);
        let ms = build_mode_set(s0, 20.0, 100.0, 1.0).unwrap();
        let r = sample_realization(Arc::new(ms), 5);
        let s = PhysicalScales::reference();
        let g = greens_function(&s, &ForceModel::harmonic(&s), GreensKind::Damped).unwrap();
        let fo = first_order_response(&g, &r, &TimeGrid::new(0.0, 0.05, 1000)).unwrap();
        assert!(fo.x.iter().chain(&fo.p).all(|v| *v == 0.0));
    }

    #[test]
    fn second_order_vanishes_for_harmonic_and_symmetric_quartic() {
        let s = PhysicalScales::reference();
        let grid = TimeGrid::new(0.0, 0.05, 800);
        let x1: Vec<f64> = (0..800).map(|j| (j as f64 * 0.05).sin()).collect();
        let harm = ForceModel::harmonic(&s);
        let g = greens_function(&s, &harm, GreensKind::Damped).unwrap();
        let xz: Vec<f64> = (0..800).map(|j| (j as f64 * 0.05).cos()).collect();
        assert!(second_order_response(&g, &harm, &xz, &x1, &grid).unwrap().iter().all(|v| *v == 0.0));
        let q = ForceModel::quartic(&s, 0.1).unwrap();
        let gq = greens_function(&s, &q, GreensKind::Damped).unwrap();
        let zero = vec![0.0; 800];
        assert!(second_order_response(&gq, &q, &zero, &x1, &grid).unwrap().iter().all(|v| *v == 0.0));
        assert!(matches!(
            second_order_response(&gq, &q, &zero[..10], &x1, &grid),
            Err(SedError::Config(_))
        ));
    }

    #[test]
    fn fft_convolution_matches_direct() {
        let a: Vec<f64> = (0..700).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
        let b: Vec<f64> = (0..700).map(|i| ((i * 5) % 11) as f64 * 0.1).collect();
        let fast = convolve(&a, &b);
        for j in [0, 1, 350, 699] {
            let d: f64 = (0..=j).map(|i| a[j - i] * b[i]).sum();
            assert!((fast[j] - d).abs() < 1e-9 * d.abs().max(1.0));
        }
    }
}
