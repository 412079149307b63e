//! Acceptance criteria in the reference configuration
//! (ħ = m = ω0 = 1, τ = 0.01, ω_c = 20).
//!
//! Every test prints one `[Cn] PASS|FAIL` line per checked quantity and then
//! asserts that all of them passed.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use sedlab::balance::{measure_balance, predict_decay, trace_dpp, trace_dpx};
use sedlab::dynamics::{
    first_order_response, greens_function, integrate_trajectory, zeroth_order, GreensKind,
};
use sedlab::ensemble::{
    memory_loss, power_spectrum, run_ensemble, stationary_moments, EnsembleConfig, EnsembleReport,
    InitialConditions, SpectrumConfig,
};
use sedlab::matrix::{
    commutator_deviation, commutator_matrix, diagonalize_potential, oscillator_matrices, trk_sum,
};
use sedlab::seed::trajectory_seed;
use sedlab::zpf_field::{
    build_mode_set, empirical_correlation, sample_realization, theoretical_force_correlation, TimeGrid,
};
use sedlab::{Estimate, ForceModel, PhysicalScales};

const OMEGA_CUT: f64 = 20.0;

struct Verdicts {
    id: &'static str,
    failed: Vec<String>,
}

impl Verdicts {
    fn new(id: &'static str) -> Self {
        Verdicts { id, failed: Vec::new() }
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        println!("[{}] {} {name}: {detail}", self.id, if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(name.to_string());
        }
    }

    fn relative(&mut self, name: &str, measured: Estimate, target: f64, tol: f64) {
        let rel = measured.relative_error(target);
        self.check(
            name,
            rel <= tol,
            format!(
                "{:.6} ± {:.6} vs {target} (rel. error {:.4}, tolerance {tol}, z = {:.2})",
                measured.value,
                measured.stderr,
                rel,
                measured.z_score(target)
            ),
        );
    }

    fn sigma(&mut self, name: &str, measured: Estimate, target: f64, n: f64) {
        self.check(
            name,
            measured.within_sigma(target, n),
            format!(
                "{:.6e} ± {:.3e} vs {target:e} (z = {:.2}, limit {n}σ)",
                measured.value,
                measured.stderr,
                measured.z_score(target)
            ),
        );
    }

    fn finish(self) {
        assert!(self.failed.is_empty(), "[{}] failed: {}", self.id, self.failed.join(", "));
    }
}

fn reference() -> PhysicalScales {
    PhysicalScales::reference()
}

/// 200 trajectories, T = 2000, started at rest at the origin.
fn reference_ensemble() -> &'static EnsembleReport {
    static REPORT: OnceLock<EnsembleReport> = OnceLock::new();
    REPORT.get_or_init(|| run_ensemble(&EnsembleConfig::reference(200, 2000.0, 20_240_601)).unwrap())
}

#[test]
fn c1_field_statistics() {
    let mut v = Verdicts::new("C1");
    let s = reference();
    let modes = Arc::new(build_mode_set(s, OMEGA_CUT, 2000.0, 1.0).unwrap());
    let reals: Vec<_> = (0..500).map(|i| sample_realization(modes.clone(), trajectory_seed(7, i))).collect();
    let dt = 0.05;
    let lags: Vec<f64> = (0..=50).map(|k| k as f64 * 0.1).collect();
    let grid = TimeGrid::new(0.0, dt, 2000);
    let points = empirical_correlation(&reals, &lags, &grid).unwrap();

    let zero = theoretical_force_correlation(0.0, &s, OMEGA_CUT).unwrap();
    v.check("closed form at zero lag", (zero - 127.32).abs() < 5e-3, format!("{zero:.4} vs 127.32"));
    v.sigma("empirical zero lag", points[0].estimate, zero, 3.0);

    let mut worst = (0.0, 0.0f64);
    for p in &points {
        let th = theoretical_force_correlation(p.lag, &s, OMEGA_CUT).unwrap();
        let z = p.estimate.z_score(th).abs();
        if z > worst.1 {
            worst = (p.lag, z);
        }
    }
    v.check(
        "curve over lags [0, 5]",
        worst.1 <= 3.0,
        format!("{} lags, largest |z| = {:.2} at lag {:.2}", points.len(), worst.1, worst.0),
    );
    v.finish();
}

#[test]
fn c2_memory_loss() {
    let mut v = Verdicts::new("C2");
    let mut cfg = EnsembleConfig::reference(50, 1000.0, 99);
    cfg.stationary = false;
    cfg.burn_in = 0.0;
    cfg.retain_drive = false;
    cfg.initial = InitialConditions::Paired { x0a: 1.0, x0b: -1.0, p0: 0.0 };
    let ml = memory_loss(&cfg).unwrap();
    let rate = ml.rate.expect("divergence has peaks");
    v.relative("fitted envelope rate", rate, 5e-3, 0.02);
    let amp = ml.amplitude.unwrap();
    v.check("envelope amplitude", (amp - 2.0).abs() < 0.02, format!("{amp:.5} vs 2"));
    // envelope value one e-fold of the amplitude later: Δ = 1 at t = 200 ln 2
    let t_half = 200.0 * 2f64.ln();
    let envelope = amp * (-rate.value * t_half).exp();
    v.check("envelope at 200 ln 2", (envelope - 1.0).abs() < 0.02, format!("{envelope:.5} vs 1"));
    v.finish();
}

#[test]
fn c3_quantum_regime_fluctuations() {
    let mut v = Verdicts::new("C3");
    let r = reference_ensemble();
    let st = stationary_moments(r, (500.0, 2000.0)).unwrap();
    println!("[C3] {} independent window samples; ⟨x⟩ = {:.4} ± {:.4}", st.n_samples, st.mean_x.value, st.mean_x.stderr);
    v.relative("<x^2>", st.x2, 0.5, 0.03);
    v.relative("<p^2>", st.p2, 0.5, 0.03);
    v.relative("<H>", st.h, 0.5, 0.03);
    v.relative("dx*dp", st.dx_dp, 0.5, 0.03);
    v.finish();
}

#[test]
fn c4_commutator() {
    let mut v = Verdicts::new("C4");
    let s = reference();
    let osc = oscillator_matrices(&s, 8).unwrap();
    let c = commutator_matrix(&osc);
    let diag = (0..7).map(|i| (c[(i, i)].im - 1.0).abs().max(c[(i, i)].re.abs())).fold(0.0, f64::max);
    v.check("oscillator diagonal 0..6 = iħ", diag <= 1e-12, format!("max deviation {diag:.2e}"));
    let corner = c[(7, 7)];
    v.check(
        "oscillator corner = -7iħ",
        (corner.im + 7.0).abs() <= 1e-12 && corner.re.abs() <= 1e-12,
        format!("{corner}"),
    );
    let quartic = ForceModel::quartic(&s, 0.1).unwrap();
    let tm = diagonalize_potential(&s, &quartic, 200).unwrap();
    let dev = commutator_deviation(&tm, 40);
    v.check(
        "quartic inner 40x40 block = iħ I",
        tm.n_states() == 50 && dev <= 1e-6,
        format!("N = {}, max deviation {dev:.2e}", tm.n_states()),
    );
    v.finish();
}

#[test]
fn c5_trk_sum_rule() {
    let mut v = Verdicts::new("C5");
    let s = reference();
    let osc = oscillator_matrices(&s, 8).unwrap();
    let worst = (0..osc.trusted()).map(|n| (trk_sum(&osc, n).unwrap().value - 0.5).abs()).fold(0.0, f64::max);
    v.check("oscillator, trusted states", worst <= 1e-14, format!("{} states, max |S - 0.5| = {worst:.1e}", osc.trusted()));
    let tm = diagonalize_potential(&s, &ForceModel::quartic(&s, 0.1).unwrap(), 200).unwrap();
    let worst = (0..tm.trusted()).map(|n| (trk_sum(&tm, n).unwrap().value - 0.5).abs()).fold(0.0, f64::max);
    v.check("quartic, trusted states", worst <= 1e-6, format!("{} states, max |S - 0.5| = {worst:.1e}", tm.trusted()));
    v.finish();
}

#[test]
fn c6_energy_balance() {
    let mut v = Verdicts::new("C6");
    let r = reference_ensemble();
    let b = measure_balance(r, (500.0, 2000.0)).unwrap();
    v.relative("radiated power", b.radiated, -5e-3, 0.10);
    v.relative("absorbed power", b.absorbed, 5e-3, 0.10);
    v.sigma("net drift of <H>", b.net_drift, 0.0, 3.0);
    let osc = oscillator_matrices(&reference(), 8).unwrap();
    let dpp = trace_dpp(&osc, 0, OMEGA_CUT).unwrap().value;
    v.check("trace_dpp analytic", (dpp - 5e-3).abs() < 1e-15, format!("{dpp:e}"));
    v.sigma("measured D^pp vs trace_dpp", b.dpp, dpp, 2.0);
    println!("[C6] net power radiated + absorbed = {:.3e} ± {:.1e}", b.net_power.value, b.net_power.stderr);
    v.finish();
}

#[test]
fn c7_einstein_a_vs_linewidth() {
    let mut v = Verdicts::new("C7");
    let s = reference();
    let osc = oscillator_matrices(&s, 8).unwrap();
    let decay = predict_decay(&osc, 1).unwrap();
    let a10 = decay.transitions[0].a_coefficient;
    v.check("A_10 from matrices", (a10 - 1e-2).abs() < 1e-15, format!("{a10:e}"));

    let mut cfg = EnsembleConfig::reference(100, 5000.0, 4242);
    cfg.retain_drive = false;
    cfg.spectrum = Some(SpectrumConfig { pad_factor: 4, omega_max: 3.0 });
    let r = run_ensemble(&cfg).unwrap();
    let ps = power_spectrum(&r, 2e-3).unwrap();
    let rel = (ps.line.fwhm - a10).abs() / a10;
    v.check(
        "PSD FWHM vs A_10",
        rel <= 0.2,
        format!("FWHM {:.5} (resolution {:.5}), A_10 {a10}, rel. difference {rel:.3}", ps.line.fwhm, ps.line.resolution),
    );
    v.check(
        "PSD peak at ω0",
        (ps.line.peak_omega - 1.0).abs() <= ps.line.resolution,
        format!("{:.5}", ps.line.peak_omega),
    );
    v.finish();
}

/// `(τ/π) ∫₀^W ω³ cos(ωu) dω`, written out independently of the library.
fn force_correlation(u: f64, w: f64, tau: f64) -> f64 {
    let z = w * u;
    let scaled = if z.abs() < 1.0 {
        // Σ_k (−1)^k z^{2k} / ((2k)! (2k + 4))
        let (mut term, mut sum, mut k) = (1.0f64, 0.0, 0u32);
        while term.abs() > 1e-18 || k < 2 {
            sum += term / (2 * k + 4) as f64;
            k += 1;
            term *= -z * z / ((2 * k - 1) as f64 * (2 * k) as f64);
        }
        sum
    } else {
        let (s, c) = z.sin_cos();
        s / z + 3.0 * c / (z * z) - 6.0 * s / z.powi(3) - 6.0 * (c - 1.0) / z.powi(4)
    };
    tau / PI * w.powi(4) * scaled
}

/// Brute-force stationary `e⟨xE⟩`: `∫₀^U G(u) e²φ(u) du` with the damped
/// kernel, `U = 10/(τω0²)`, composite Simpson on a fine grid.
fn time_domain_dpx(w: f64) -> f64 {
    let tau: f64 = 0.01;
    let gamma = tau;
    let w1 = (1.0 - gamma * gamma / 4.0).sqrt();
    let upper = 10.0 / tau;
    let n = ((upper * w * 40.0) as usize / 2) * 2;
    let h = upper / n as f64;
    let f = |u: f64| (-gamma * u / 2.0).exp() * (w1 * u).sin() / w1 * force_correlation(u, w, tau);
    let mut sum = f(0.0) + f(upper);
    for j in 1..n {
        sum += f(j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

#[test]
fn c8_lamb_like_trace() {
    let mut v = Verdicts::new("C8");
    let osc = oscillator_matrices(&reference(), 8).unwrap();
    let t: Vec<_> = [100.0, 200.0, 400.0].iter().map(|&w| trace_dpx(&osc, 0, w).unwrap()).collect();
    let ratio = (t[2].renormalized - t[1].renormalized) / (t[1].renormalized - t[0].renormalized);
    v.check("log-growth ratio", (ratio - 1.0).abs() <= 0.05, format!("{ratio:.5}"));
    for (tr, w) in t.iter().zip([100.0, 200.0, 400.0]) {
        let oracle = time_domain_dpx(w);
        let rel = ((tr.total - oracle) / oracle).abs();
        v.check(
            &format!("time-domain oracle at ω_c = {w}"),
            rel <= 0.01,
            format!("{:.5} vs {oracle:.5} (rel. {rel:.1e})", tr.total),
        );
    }
    v.finish();
}

#[test]
fn c9_property_suites() {
    let mut v = Verdicts::new("C9");
    let s = reference();
    let free = s.with_tau(0.0);
    let harmonic = ForceModel::harmonic(&s);

    let err = |dt: f64| {
        let n = (2.0 * PI / dt).round();
        let tr = zeroth_order(&free, &harmonic, 1.0, 0.0, (0.0, 2.0 * PI), 2.0 * PI / n).unwrap();
        (tr.x.last().unwrap() - 1.0).abs()
    };
    let (e1, e2) = (err(0.04), err(0.02));
    v.check("integrator order", e1 / e2 >= 14.0, format!("error ratio {:.2} on halving dt", e1 / e2));

    let quartic = ForceModel::quartic(&s, 0.1).unwrap();
    for (name, force) in [("harmonic", &harmonic), ("quartic", &quartic)] {
        for kind in [GreensKind::Bare, GreensKind::Damped] {
            let g = greens_function(&s, force, kind).unwrap();
            let h = 1e-7;
            let slope = (g.value(h) - g.value(0.0)) / h;
            v.check(
                &format!("G identities, {name} {kind:?}"),
                g.value(0.0) == 0.0 && (slope - 1.0).abs() < 1e-6,
                format!("G(0) = {}, G'(0+) = {slope:.9}", g.value(0.0)),
            );
        }
    }

    let dt = 0.0125;
    let modes = Arc::new(build_mode_set(s, OMEGA_CUT, 2000.0, 1.0).unwrap());
    let field = sample_realization(modes, 31);
    let full = integrate_trajectory(&s, &harmonic, Some(&field), 0.0, 0.0, (0.0, 100.0), dt).unwrap();
    let g = greens_function(&s, &harmonic, GreensKind::Damped).unwrap();
    let first = first_order_response(&g, &field, &TimeGrid::new(0.0, dt, full.len())).unwrap();
    let scale = full.x.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let diff = full.x.iter().zip(&first.x).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    v.check(
        "hierarchy exact for linear force",
        diff / scale <= 1e-3,
        format!("max |x - (x0 + x1)| / max |x| = {:.2e} over [0, 100]", diff / scale),
    );

    let mut cfg = EnsembleConfig::reference(12, 700.0, 5);
    cfg.initial = InitialConditions::Gaussian { mean_x: 0.0, sd_x: 0.7, mean_p: 0.0, sd_p: 0.7 };
    let reports: Vec<Vec<u8>> = [1usize, 2, 3]
        .iter()
        .map(|&n| {
            cfg.threads = Some(n);
            serde_json::to_vec(&run_ensemble(&cfg).unwrap()).unwrap()
        })
        .collect();
    v.check(
        "bit-identical reports for 1, 2, 3 threads",
        reports[0] == reports[1] && reports[1] == reports[2],
        format!("{} bytes each", reports[0].len()),
    );
    v.finish();
}
