//! Conservative binding forces.

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result, SedError};
use crate::scales::PhysicalScales;

/// Serializable description of a binding force.
///
/// `harmonic` is `f = -m ω0² x`; `quartic` adds `-4 λ x³`, i.e. the potential
/// `½ m ω0² x² + λ x⁴`; `polynomial` takes the force coefficients directly,
/// `f(x) = Σ c_i x^i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForceSpec {
    Harmonic,
    Quartic { lambda: f64 },
    Polynomial { coeffs: Vec<f64> },
}

impl ForceSpec {
    pub fn build(&self, scales: &PhysicalScales) -> Result<ForceModel> {
        let k = scales.m * scales.omega0 * scales.omega0;
        match self {
            ForceSpec::Harmonic => ForceModel::polynomial(vec![0.0, -k]).map(|f| f.with_spec(self.clone())),
            ForceSpec::Quartic { lambda } => {
                if !(*lambda >= 0.0) {
                    return config_err("quartic lambda must be non-negative");
                }
                ForceModel::polynomial(vec![0.0, -k, 0.0, -4.0 * lambda]).map(|f| f.with_spec(self.clone()))
            }
            ForceSpec::Polynomial { coeffs } => {
                ForceModel::polynomial(coeffs.clone()).map(|f| f.with_spec(self.clone()))
            }
        }
    }
}

/// A polynomial binding force with its derivatives and potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceModel {
    pub spec: ForceSpec,
    /// `f(x) = Σ coeffs[i] x^i`
    pub coeffs: Vec<f64>,
    /// Integration aborts with an escape error beyond this radius.
    pub escape_radius: f64,
    potential_offset: f64,
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, ci)| i as f64 * ci).collect()
}

impl ForceModel {
    pub fn harmonic(scales: &PhysicalScales) -> Self {
        ForceSpec::Harmonic.build(scales).expect("harmonic force is always valid")
    }

    pub fn quartic(scales: &PhysicalScales, lambda: f64) -> Result<Self> {
        ForceSpec::Quartic { lambda }.build(scales)
    }

    /// Polynomial force. The leading coefficient must be of odd degree and
    /// negative so that the force confines.
    pub fn polynomial(mut coeffs: Vec<f64>) -> Result<Self> {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return config_err("force coefficients must be finite");
        }
        let deg = coeffs.len().saturating_sub(1);
        if coeffs.is_empty() || deg % 2 == 0 || coeffs[deg] >= 0.0 {
            return config_err(
                "force is not confining: leading term must have odd degree and negative coefficient",
            );
        }
        let mut f = ForceModel {
            spec: ForceSpec::Polynomial { coeffs: coeffs.clone() },
            coeffs,
            escape_radius: 0.0,
            potential_offset: 0.0,
        };
        f.escape_radius = (10.0 * f.confinement_radius()).max(1e3);
        let stable = f.stable_equilibria();
        let vmin = stable
            .iter()
            .map(|&x| f.raw_potential(x))
            .fold(f64::INFINITY, f64::min);
        f.potential_offset = if vmin.is_finite() { vmin } else { 0.0 };
        Ok(f)
    }

    fn with_spec(mut self, spec: ForceSpec) -> Self {
        self.spec = spec;
        self
    }

    pub fn with_escape_radius(mut self, r: f64) -> Self {
        self.escape_radius = r;
        self
    }

    pub fn force(&self, x: f64) -> f64 {
        horner(&self.coeffs, x)
    }

    pub fn d1(&self, x: f64) -> f64 {
        horner(&derivative(&self.coeffs), x)
    }

    pub fn d2(&self, x: f64) -> f64 {
        horner(&derivative(&derivative(&self.coeffs)), x)
    }

    pub fn d3(&self, x: f64) -> f64 {
        horner(&derivative(&derivative(&derivative(&self.coeffs))), x)
    }

    /// Force and its first two derivatives in one pass.
    #[inline]
    pub fn eval2(&self, x: f64) -> (f64, f64) {
        let mut f = 0.0;
        let mut df = 0.0;
        for &c in self.coeffs.iter().rev() {
            df = df * x + f;
            f = f * x + c;
        }
        (f, df)
    }

    fn raw_potential(&self, x: f64) -> f64 {
        // V = -∫₀ˣ f
        -self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (i, &c)| acc * x + c / (i + 1) as f64)
            * x
    }

    /// Potential `V(x) = -∫ f`, shifted so that its minimum is zero.
    pub fn potential(&self, x: f64) -> f64 {
        self.raw_potential(x) - self.potential_offset
    }

    /// Coefficients of `V(x)` (constant first), shifted so `min V = 0`.
    pub fn potential_coeffs(&self) -> Vec<f64> {
        let mut v = vec![-self.potential_offset];
        v.extend(self.coeffs.iter().enumerate().map(|(i, c)| -c / (i + 1) as f64));
        v
    }

    /// Radius beyond which `f(x) x < 0` (Cauchy bound on the roots of `f`).
    pub fn confinement_radius(&self) -> f64 {
        let n = self.coeffs.len() - 1;
        let lead = self.coeffs[n].abs();
        1.0 + self.coeffs[..n].iter().map(|c| c.abs() / lead).fold(0.0, f64::max)
    }

    /// Roots of `f` with `f' < 0`, ascending.
    pub fn stable_equilibria(&self) -> Vec<f64> {
        let r = self.confinement_radius();
        let n = 4000;
        let h = 2.0 * r / n as f64;
        let mut roots = Vec::new();
        let mut xa = -r;
        let mut fa = self.force(xa);
        for i in 1..=n {
            let xb = -r + i as f64 * h;
            let fb = self.force(xb);
            if fa == 0.0 {
                roots.push(xa);
            } else if fa * fb < 0.0 {
                let (mut lo, mut hi, mut flo) = (xa, xb, fa);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = self.force(mid);
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if (fm < 0.0) == (flo < 0.0) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            xa = xb;
            fa = fb;
        }
        roots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        roots.into_iter().filter(|&x| self.d1(x) < 0.0).collect()
    }

    /// The unique stable equilibrium, or an error when there is none or several.
    pub fn unique_equilibrium(&self) -> Result<f64> {
        let eq = self.stable_equilibria();
        match eq.as_slice() {
            [x] => Ok(*x),
            [] => Err(SedError::Config("force has no stable equilibrium".into())),
            _ => Err(SedError::Config(format!(
                "force has {} stable equilibria; linearization branch is ambiguous",
                eq.len()
            ))),
        }
    }
}
