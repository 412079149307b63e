// Synthesize zero-point field realizations and compare the empirical force
// correlation with its closed form.

use std::sync::Arc;

use sedlab::seed::trajectory_seed;
use sedlab::zpf_field::{build_mode_set, empirical_correlation, sample_realization, theoretical_force_correlation, TimeGrid};
use sedlab::PhysicalScales;

pub fn run() -> sedlab::Result<()> {
    let scales = PhysicalScales::reference();
    let omega_cut = 20.0;
    let modes = Arc::new(build_mode_set(scales, omega_cut, 2000.0, 1.0)?);
    println!("{} modes, spacing {:.4e}, variance {:.3}", modes.len(), modes.delta_omega, modes.variance());

    let realizations: Vec<_> = (0..100).map(|i| sample_realization(modes.clone(), trajectory_seed(1, i))).collect();
    let lags: Vec<f64> = (0..=10).map(|k| 0.05 * k as f64).collect();
    let points = empirical_correlation(&realizations, &lags, &TimeGrid::new(0.0, 0.05, 2000))?;

    println!("{:>6} {:>12} {:>12} {:>10}", "lag", "closed form", "empirical", "stderr");
    for p in &points {
        let th = theoretical_force_correlation(p.lag, &scales, omega_cut)?;
        println!("{:>6.2} {:>12.4} {:>12.4} {:>10.4}", p.lag, th, p.estimate.value, p.estimate.stderr);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sedlab::Result<()> {
    run()
}
