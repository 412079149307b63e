use std::sync::Arc;

use sedlab::dynamics::{
    first_order_response, greens_function, integrate_trajectory, perturbative_hierarchy, second_order_response,
    zeroth_order, GreensKind,
};
use sedlab::zpf_field::{build_mode_set, sample_realization, TimeGrid};
use sedlab::{ForceModel, PhysicalScales};

fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |a, x| a.max(x.abs()))
}

/// Residual of `x0 + x1 + x2` against the full integrator, with the field
/// amplitude set by the coupling used to build the modes.
fn quartic_residual(field_tau: f64) -> (f64, f64) {
    let s = PhysicalScales::reference();
    let f = ForceModel::quartic(&s, 0.1).unwrap();
    let modes = Arc::new(build_mode_set(s.with_tau(field_tau), 20.0, 200.0, 1.0).unwrap());
    let field = sample_realization(modes, 11);
    let span = (0.0, 20.0);
    let dt = 0.0125;
    let full = integrate_trajectory(&s, &f, Some(&field), 1.0, 0.0, span, dt).unwrap();
    let h = perturbative_hierarchy(&s, &f, &field, 1.0, 0.0, span, dt).unwrap();
    let sum = h.sum();
    let residual = max_abs(full.x.iter().zip(&sum).map(|(a, b)| a - b));
    (residual, max_abs(h.x[2].iter().copied()))
}

#[test]
fn residual_is_third_order_in_the_field() {
    let (r1, second) = quartic_residual(1e-4);
    let (r2, _) = quartic_residual(2.5e-5);
    let ratio = r1 / r2;
    assert!(second > 0.0);
    assert!((ratio - 8.0).abs() < 0.8, "residual ratio {ratio} ({r1:e} / {r2:e})");
}

#[test]
fn second_order_missing_gives_second_order_residual() {
    let s = PhysicalScales::reference();
    let f = ForceModel::quartic(&s, 0.1).unwrap();
    let run = |tau_f: f64| {
        let modes = Arc::new(build_mode_set(s.with_tau(tau_f), 20.0, 200.0, 1.0).unwrap());
        let field = sample_realization(modes, 11);
        let full = integrate_trajectory(&s, &f, Some(&field), 1.0, 0.0, (0.0, 20.0), 0.0125).unwrap();
        let h = perturbative_hierarchy(&s, &f, &field, 1.0, 0.0, (0.0, 20.0), 0.0125).unwrap();
        max_abs((0..full.len()).map(|j| full.x[j] - h.x[0][j] - h.x[1][j]))
    };
    let ratio = run(1e-4) / run(2.5e-5);
    assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
}

#[test]
fn convolution_route_agrees_about_equilibrium() {
    // x0 ≡ 0: the coupled hierarchy and the Green-function convolutions
    // linearize about the same point.
    let s = PhysicalScales::reference();
    let f = ForceModel::quartic(&s, 0.1).unwrap();
    let modes = Arc::new(build_mode_set(s.with_tau(1e-4), 20.0, 200.0, 1.0).unwrap());
    let field = sample_realization(modes, 3);
    let dt = 0.0125;
    let h = perturbative_hierarchy(&s, &f, &field, 0.0, 0.0, (0.0, 50.0), dt).unwrap();
    let g = greens_function(&s, &f, GreensKind::Damped).unwrap();
    let grid = TimeGrid::new(0.0, dt, h.x[1].len());
    let first = first_order_response(&g, &field, &grid).unwrap();
    let scale = max_abs(h.x[1].iter().copied());
    let diff = max_abs(h.x[1].iter().zip(&first.x).map(|(a, b)| a - b));
    assert!(diff / scale < 2e-3, "{}", diff / scale);
    let x0 = zeroth_order(&s, &f, 0.0, 0.0, (0.0, 50.0), dt).unwrap();
    let second = second_order_response(&g, &f, &x0.x, &first.x, &grid).unwrap();
    assert!(second.iter().all(|v| *v == 0.0));
    assert!(h.x[2].iter().all(|v| v.abs() < 1e-12 * scale));
}

#[test]
fn bare_kernel_drifts_beyond_the_dissipation_time() {
    let s = PhysicalScales::reference();
    let f = ForceModel::harmonic(&s);
    let modes = Arc::new(build_mode_set(s, 20.0, 2000.0, 1.0).unwrap());
    let field = sample_realization(modes, 8);
    let dt = 0.0125;
    let full = integrate_trajectory(&s, &f, Some(&field), 0.0, 0.0, (0.0, 1000.0), dt).unwrap();
    let bare = greens_function(&s, &f, GreensKind::Bare).unwrap();
    let x1 = first_order_response(&bare, &field, &TimeGrid::new(0.0, dt, full.len())).unwrap().x;
    let err = |a: usize, b: usize| {
        max_abs((a..b).map(|j| full.x[j] - x1[j])) / max_abs(full.x[a..b].iter().copied())
    };
    let early = err(0, 161);
    let late = err(60_000, 80_001);
    assert!(early < 1e-2, "early {early}");
    assert!(late > 10.0 * early, "late {late} early {early}");
}
