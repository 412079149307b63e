// Stationary moments of the field-driven oscillator next to the linear
// response of the same band-limited model and the ground-state values.

use sedlab::balance::harmonic_linear_response;
use sedlab::ensemble::{run_ensemble, stationary_moments, EnsembleConfig};
use sedlab::matrix::{heisenberg_product, oscillator_matrices};

pub fn run() -> sedlab::Result<()> {
    let cfg = EnsembleConfig::reference(24, 1500.0, 5);
    let report = run_ensemble(&cfg)?;
    let st = stationary_moments(&report, (cfg.burn_in, cfg.t_total))?;
    let lr = harmonic_linear_response(&cfg.scales, cfg.field.omega_cut)?;
    let ground = heisenberg_product(&oscillator_matrices(&cfg.scales, 8)?, 0)?;

    println!("{:>6} {:>18} {:>14} {:>12}", "", "simulated", "linear resp.", "ground state");
    let row = |name: &str, e: sedlab::Estimate, lr: f64, gs: f64| {
        println!("{name:>6} {:>10.4} ± {:.4} {lr:>14.4} {gs:>12.4}", e.value, e.stderr);
    };
    row("<x²>", st.x2, lr.x2, ground.var_x);
    row("<p²>", st.p2, lr.p2, ground.var_p);
    row("<H>", st.h, lr.energy, 0.5);
    row("ΔxΔp", st.dx_dp, lr.dx_dp, ground.product.sqrt());
    Ok(())
}

#[allow(dead_code)]
fn main() -> sedlab::Result<()> {
    run()
}
