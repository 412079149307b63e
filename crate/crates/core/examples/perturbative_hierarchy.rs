// Orders of the field expansion for a quartic oscillator and how the
// truncation error scales with the field amplitude.

use std::sync::Arc;

use sedlab::dynamics::{greens_function, integrate_trajectory, perturbative_hierarchy, GreensKind};
use sedlab::zpf_field::{build_mode_set, sample_realization};
use sedlab::{ForceModel, PhysicalScales};

pub fn run() -> sedlab::Result<()> {
    let s = PhysicalScales::reference();
    let force = ForceModel::quartic(&s, 0.1)?;
    let g = greens_function(&s, &force, GreensKind::Damped)?;
    println!("linearized frequency {:.5}, damping {:.5}", g.omega1, g.gamma);

    let mut previous: Option<(f64, f64)> = None;
    for field_tau in [4e-4, 1e-4, 2.5e-5] {
        let modes = Arc::new(build_mode_set(s.with_tau(field_tau), 20.0, 200.0, 1.0)?);
        let field = sample_realization(modes, 11);
        let full = integrate_trajectory(&s, &force, Some(&field), 1.0, 0.0, (0.0, 20.0), 0.0125)?;
        let h = perturbative_hierarchy(&s, &force, &field, 1.0, 0.0, (0.0, 20.0), 0.0125)?;
        let worst = |k: usize| {
            (0..full.len())
                .map(|j| (full.x[j] - (0..k).map(|l| h.x[l][j]).sum::<f64>()).abs())
                .fold(0.0, f64::max)
        };
        let (r1, r2) = (worst(2), worst(3));
        let ratios = previous.map(|(a, b)| format!("  ratios {:.2} {:.2}", a / r1, b / r2)).unwrap_or_default();
        println!("field coupling {field_tau:.1e}: residual after x¹ {r1:.3e}, after x² {r2:.3e}{ratios}");
        previous = Some((r1, r2));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> sedlab::Result<()> {
    run()
}
