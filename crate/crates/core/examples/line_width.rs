// Width of the stationary position spectrum against the 1→0 emission rate.

use sedlab::balance::predict_decay;
use sedlab::ensemble::{power_spectrum, run_ensemble, EnsembleConfig, SpectrumConfig};
use sedlab::matrix::oscillator_matrices;

pub fn run() -> sedlab::Result<()> {
    let mut cfg = EnsembleConfig::reference(16, 3000.0, 21);
    cfg.retain_drive = false;
    cfg.spectrum = Some(SpectrumConfig { pad_factor: 4, omega_max: 2.0 });
    let report = run_ensemble(&cfg)?;
    let ps = power_spectrum(&report, 5e-3)?;
    let a10 = predict_decay(&oscillator_matrices(&cfg.scales, 4)?, 1)?.transitions[0].a_coefficient;

    let line = ps.line;
    println!("peak at ω = {:.4} (resolution {:.4})", line.peak_omega, line.resolution);
    println!("FWHM = {:.5}, A_10 = {a10:.5}, ratio {:.3}", line.fwhm, line.fwhm / a10);
    println!("area below ω = 2: {:.4}", line.integral);
    Ok(())
}

#[allow(dead_code)]
fn main() -> sedlab::Result<()> {
    run()
}
