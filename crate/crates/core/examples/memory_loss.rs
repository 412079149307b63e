// Two sub-ensembles started at x = ±1 and driven by the same field
// realizations forget their initial conditions at the amplitude decay rate.

use sedlab::ensemble::{memory_loss, EnsembleConfig, InitialConditions};

pub fn run() -> sedlab::Result<()> {
    let mut cfg = EnsembleConfig::reference(10, 600.0, 99);
    cfg.stationary = false;
    cfg.burn_in = 0.0;
    cfg.retain_drive = false;
    cfg.initial = InitialConditions::Paired { x0a: 1.0, x0b: -1.0, p0: 0.0 };

    let ml = memory_loss(&cfg)?;
    for (t, d) in ml.peaks.iter().step_by(15) {
        println!("t = {t:7.2}  |Δx| = {d:.5}  envelope 2exp(-γt/2) = {:.5}", 2.0 * (-0.005 * t).exp());
    }
    if let Some(rate) = ml.rate {
        let expected = cfg.scales.amplitude_decay_rate();
        println!("fitted rate {:.6} ± {:.1e}, expected {expected}", rate.value, rate.stderr);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sedlab::Result<()> {
    run()
}
