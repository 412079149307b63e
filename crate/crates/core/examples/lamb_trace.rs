// Cutoff dependence of the stationary position-field correlator of the
// oscillator ground state.

use sedlab::balance::trace_dpx;
use sedlab::matrix::oscillator_matrices;
use sedlab::PhysicalScales;

pub fn run() -> sedlab::Result<()> {
    let tm = oscillator_matrices(&PhysicalScales::reference(), 8)?;
    println!("{:>8} {:>14} {:>14} {:>14}", "ω_c", "total", "free part", "remainder");
    let mut prev: Option<f64> = None;
    for wc in [25.0, 50.0, 100.0, 200.0, 400.0, 800.0] {
        let t = trace_dpx(&tm, 0, wc)?;
        let step = prev.map(|p| format!("  Δ per doubling {:.6}", t.renormalized - p)).unwrap_or_default();
        println!("{wc:>8} {:>14.6} {:>14.6} {:>14.6}{step}", t.total, t.free_particle, t.renormalized);
        prev = Some(t.renormalized);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sedlab::Result<()> {
    run()
}
