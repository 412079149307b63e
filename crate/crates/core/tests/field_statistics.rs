use std::f64::consts::PI;
use std::sync::Arc;

use sedlab::stats::{excess_kurtosis, mean_stderr};
use sedlab::zpf_field::{
    build_mode_set, empirical_correlation, eval_field_grid, sample_realization, theoretical_force_correlation,
    TimeGrid,
};
use sedlab::PhysicalScales;

#[test]
fn phase_mean_vanishes() {
    let ms = Arc::new(build_mode_set(PhysicalScales::reference(), 20.0, 10.0, 1.0).unwrap());
    let n = 10_000;
    let reals: Vec<_> = (0..n).map(|i| sample_realization(ms.clone(), i as u64)).collect();
    let se = PI / (3.0 * n as f64).sqrt();
    for alpha in [0, 7, ms.len() - 1] {
        let phases: Vec<f64> = reals.iter().map(|r| r.phases[alpha]).collect();
        let est = mean_stderr(&phases);
        assert!(est.value.abs() < 3.0 * se, "mode {alpha}: {}", est.value);
        assert!((est.stderr - se).abs() < 0.05 * se);
    }
}

#[test]
fn distinct_seeds_are_uncorrelated() {
    let ms = Arc::new(build_mode_set(PhysicalScales::reference(), 20.0, 100.0, 1.0).unwrap());
    let reals: Vec<_> = (0..400).map(|i| sample_realization(ms.clone(), 1000 + i)).collect();
    let var = PI * PI / 3.0;
    let corr: Vec<f64> = reals
        .windows(2)
        .map(|w| w[0].phases.iter().zip(&w[1].phases).map(|(a, b)| a * b).sum::<f64>() / (ms.len() as f64 * var))
        .collect();
    let est = mean_stderr(&corr);
    assert!(est.within_sigma(0.0, 3.0), "{} ± {}", est.value, est.stderr);
}

#[test]
fn many_mode_field_is_gaussian() {
    let s = PhysicalScales::reference();
    let ms = Arc::new(build_mode_set(s, 20.0, 1000.0, 1.0).unwrap());
    assert!(ms.len() >= 1000);
    let samples: Vec<f64> = (0..4000).map(|i| sample_realization(ms.clone(), 77 + i).eval(13.0)).collect();
    let k = excess_kurtosis(&samples);
    assert!(k.within_sigma(0.0, 3.0), "{} ± {}", k.value, k.stderr);
    let var = mean_stderr(&samples.iter().map(|x| x * x).collect::<Vec<_>>());
    assert!(var.within_sigma(ms.variance(), 3.0));
}

#[test]
fn correlation_is_stationary() {
    let s = PhysicalScales::reference();
    let ms = Arc::new(build_mode_set(s, 20.0, 200.0, 1.0).unwrap());
    let reals: Vec<_> = (0..200).map(|i| sample_realization(ms.clone(), 5 + i)).collect();
    let lags = [0.0, 0.1, 0.25, 0.5, 1.0];
    let first = empirical_correlation(&reals, &lags, &TimeGrid::new(0.0, 0.05, 1000)).unwrap();
    let second = empirical_correlation(&reals, &lags, &TimeGrid::new(100.0, 0.05, 1000)).unwrap();
    for (a, b) in first.iter().zip(&second) {
        let z = (a.estimate.value - b.estimate.value) / a.estimate.stderr.hypot(b.estimate.stderr);
        assert!(z.abs() < 3.0, "lag {}: z = {z}", a.lag);
    }
}

#[test]
fn full_window_variance_is_the_mode_sum() {
    let s = PhysicalScales::reference();
    let ms = Arc::new(build_mode_set(s, 20.0, 2000.0, 1.0).unwrap());
    let target = s.spectral_prefactor() * 20f64.powi(4) / 4.0;
    assert!((theoretical_force_correlation(0.0, &s, 20.0).unwrap() - target).abs() < 1e-12 * target);
    let grid = TimeGrid::new(0.0, 0.05, 40_000);
    let per_real: Vec<f64> = (0..20)
        .map(|i| {
            let y = eval_field_grid(&sample_realization(ms.clone(), i), &grid).unwrap();
            y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64
        })
        .collect();
    // over a whole period the grid variance equals Σ A²/2 for every realization
    for v in &per_real {
        assert!((v - ms.variance()).abs() < 1e-9 * ms.variance());
    }
    let trapezoid = s.spectral_prefactor() * (20f64.powi(3) * ms.delta_omega / 2.0);
    assert!((ms.variance() - target).abs() < 1.01 * trapezoid);
}

#[test]
fn decoupled_field_vanishes() {
    let s = PhysicalScales::reference().with_tau(0.0);
    let ms = Arc::new(build_mode_set(s, 20.0, 100.0, 1.0).unwrap());
    let reals: Vec<_> = (0..3).map(|i| sample_realization(ms.clone(), i)).collect();
    let pts = empirical_correlation(&reals, &[0.0, 0.5, 2.0], &TimeGrid::new(0.0, 0.05, 100)).unwrap();
    assert!(pts.iter().all(|p| p.estimate.value == 0.0));
    assert_eq!(theoretical_force_correlation(1.3, &s, 20.0).unwrap(), 0.0);
}
