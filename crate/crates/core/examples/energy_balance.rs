// Power radiated and absorbed in the stationary state, compared with the
// matrix-layer prediction, plus emission rates of excited states.

use sedlab::balance::{compare_ground_state, measure_balance, predict_decay};
use sedlab::ensemble::{run_ensemble, EnsembleConfig};
use sedlab::matrix::oscillator_matrices;

pub fn run() -> sedlab::Result<()> {
    let cfg = EnsembleConfig::reference(24, 1500.0, 12);
    let report = run_ensemble(&cfg)?;
    let balance = measure_balance(&report, (cfg.burn_in, cfg.t_total))?;
    let tm = oscillator_matrices(&cfg.scales, 8)?;

    println!("{:>10} {:>12} {:>10} {:>12} {:>5}", "quantity", "measured", "stderr", "predicted", "pass");
    for row in compare_ground_state(&balance, &tm, cfg.field.omega_cut)? {
        println!("{:>10} {:>12.4e} {:>10.1e} {:>12.4e} {:>5}", row.quantity, row.measured, row.stderr, row.predicted, row.pass);
    }
    for n in 0..4 {
        let d = predict_decay(&tm, n)?;
        let rates: Vec<String> = d.transitions.iter().map(|t| format!("{}→{}: A = {:.3e}", t.from, t.to, t.a_coefficient)).collect();
        println!("state {n}: dH/dt = {:+.3e}  {}", d.dh_dt, rates.join(", "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sedlab::Result<()> {
    run()
}
