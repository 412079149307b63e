//! One-dimensional quadrature: adaptive Gauss-Kronrod (7/15) and a
//! principal-value integrator built on top of it.

use crate::error::{Result, SedError};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate drops below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (v, e) = gk15(&f, lo, hi);
    let mut parts = vec![(lo, hi, v, e)];
    let max_parts = 20_000;
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if !total.is_finite() {
            return Err(SedError::Numerical("non-finite integrand".into()));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(sign * total);
        }
        if parts.len() >= max_parts {
            return Err(SedError::Numerical(format!(
                "quadrature did not converge on [{lo}, {hi}]: estimate {total}, error {err}"
            )));
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (a0, b0, _, _) = parts.swap_remove(idx);
        let mid = 0.5 * (a0 + b0);
        let (v1, e1) = gk15(&f, a0, mid);
        let (v2, e2) = gk15(&f, mid, b0);
        parts.push((a0, mid, v1, e1));
        parts.push((mid, b0, v2, e2));
    }
}

/// Principal value of `∫_a^b f(ω) dω` where `f` has simple poles at `poles`
/// (all strictly inside `(a, b)`).
///
/// A symmetric window of half-width `delta` is cut out around every pole and
/// the result is Richardson-extrapolated over `delta, delta/2` to remove the
/// leading O(delta) term. Returns the extrapolated value together with the
/// difference between the two finest levels as a diagnostic.
pub fn principal_value<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    poles: &[f64],
    delta: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    let mut poles: Vec<f64> = poles.to_vec();
    poles.sort_by(f64::total_cmp);
    poles.dedup_by(|x, y| (*x - *y).abs() < 4.0 * delta);
    for &p in &poles {
        if !(p - delta > a && p + delta < b) {
            return Err(SedError::Numerical(format!(
                "pole at {p} is not inside ({a}, {b}) by more than the exclusion width {delta}"
            )));
        }
    }
    let excluded = |d: f64| -> Result<f64> {
        let mut edges = vec![a];
        for &p in &poles {
            edges.push(p - d);
            edges.push(p + d);
        }
        edges.push(b);
        let mut sum = 0.0;
        for seg in edges.chunks(2) {
            let (lo, hi) = (seg[0], seg[1]);
            sum += integrate(&f, lo, hi, 1e-300, rel_tol)?;
        }
        Ok(sum)
    };
    let i1 = excluded(delta)?;
    let i2 = excluded(0.5 * delta)?;
    let i3 = excluded(0.25 * delta)?;
    let r12 = 2.0 * i2 - i1;
    let r23 = 2.0 * i3 - i2;
    // second Richardson level: remaining error is O(delta^3)
    let value = (8.0 * r23 - r12) / 7.0;
    let diag = (r23 - r12).abs();
    if !value.is_finite() {
        return Err(SedError::Numerical(format!(
            "principal value diverged (levels {i1}, {i2}, {i3})"
        )));
    }
    Ok((value, diag))
}
