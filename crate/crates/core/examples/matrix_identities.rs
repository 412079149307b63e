// Commutator, sum rule and uncertainty product for the oscillator and a
// quartic anharmonic potential.

use sedlab::matrix::{
    commutator_deviation, commutator_matrix, diagonalize_potential, heisenberg_product, oscillator_matrices, trk_sum,
};
use sedlab::{ForceModel, PhysicalScales};

pub fn run() -> sedlab::Result<()> {
    let s = PhysicalScales::reference();
    let osc = oscillator_matrices(&s, 8)?;
    let c = commutator_matrix(&osc);
    let diag: Vec<String> = (0..8).map(|i| format!("{:+.1}i", c[(i, i)].im)).collect();
    println!("oscillator [x,p] diagonal: {}", diag.join(" "));

    let quartic = ForceModel::quartic(&s, 0.1)?;
    let tm = diagonalize_potential(&s, &quartic, 200)?;
    println!("quartic: {} states, E0 = {:.9}", tm.n_states(), tm.energies[0]);
    println!("inner {0}x{0} block deviation from iħ: {1:.2e}", tm.trusted(), commutator_deviation(&tm, tm.trusted()));
    for n in [0, 5, 20, tm.trusted() - 1] {
        let sum = trk_sum(&tm, n)?;
        let u = heisenberg_product(&tm, n)?;
        println!("n = {n:2}  sum rule {:.10}  (Δx)²(Δp)² = {:.5} ≥ {}", sum.value, u.product, u.bound);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sedlab::Result<()> {
    run()
}
