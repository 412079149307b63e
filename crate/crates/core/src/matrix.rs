//! Transition matrices and the algebraic identities they satisfy.
//!
//! States are eigenstates of `H = p²/2m + V(x)`. Matrix elements use the
//! convention `x_nk(t) = x_nk e^{-i ω_kn t}` with `ω_kn = (E_k - E_n)/ħ`, so that
//! `p_nk = -i m ω_kn x_nk`.

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result, SedError};
use crate::force::ForceModel;
use crate::scales::PhysicalScales;

/// Largest allowed shift of the ground energy when the basis grows by
/// [`CONVERGENCE_STEP`] functions.
pub const CONVERGENCE_TOL: f64 = 1e-8;
pub const CONVERGENCE_STEP: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub scales: PhysicalScales,
    pub energies: Vec<f64>,
    pub x: DMatrix<Complex64>,
    pub p: DMatrix<Complex64>,
}

impl TransitionMatrix {
    pub fn n_states(&self) -> usize {
        self.energies.len()
    }

    /// `ω_kn = (E_k − E_n)/ħ`
    pub fn omega(&self, n: usize, k: usize) -> f64 {
        (self.energies[k] - self.energies[n]) / self.scales.hbar
    }

    pub fn omegas(&self) -> DMatrix<f64> {
        let n = self.n_states();
        DMatrix::from_fn(n, n, |i, j| self.omega(i, j))
    }

    /// Rows and columns excluded from identity checks (`N/5`, at least one).
    pub fn margin(&self) -> usize {
        (self.n_states() / 5).max(1)
    }

    /// Number of states whose identities are trusted.
    pub fn trusted(&self) -> usize {
        self.n_states() - self.margin()
    }

    /// Largest `|x_nk − conj(x_kn)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.n_states();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.x[(i, j)] - self.x[(j, i)].conj()).norm());
                worst = worst.max((self.p[(i, j)] - self.p[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Largest `|p_nk + i m ω_kn x_nk|` over the leading `inner` states.
    pub fn kinematic_residual(&self, inner: usize) -> f64 {
        let inner = inner.min(self.n_states());
        let m = self.scales.m;
        let mut worst = 0.0f64;
        for i in 0..inner {
            for j in 0..inner {
                let rebuilt = Complex64::new(0.0, -m * self.omega(i, j)) * self.x[(i, j)];
                worst = worst.max((self.p[(i, j)] - rebuilt).norm());
            }
        }
        worst
    }

    pub fn to_document(&self) -> TransitionDocument {
        let pairs = |mat: &DMatrix<Complex64>| -> Vec<Vec<[f64; 2]>> {
            (0..mat.nrows()).map(|i| (0..mat.ncols()).map(|j| [mat[(i, j)].re, mat[(i, j)].im]).collect()).collect()
        };
        TransitionDocument {
            scales: self.scales,
            n_states: self.n_states(),
            energies: self.energies.clone(),
            omegas: (0..self.n_states()).map(|i| (0..self.n_states()).map(|j| self.omega(i, j)).collect()).collect(),
            x: pairs(&self.x),
            p: pairs(&self.p),
        }
    }
}

/// JSON form: complex entries as `[re, im]` pairs, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDocument {
    pub scales: PhysicalScales,
    pub n_states: usize,
    pub energies: Vec<f64>,
    pub omegas: Vec<Vec<f64>>,
    pub x: Vec<Vec<[f64; 2]>>,
    pub p: Vec<Vec<[f64; 2]>>,
}

impl TransitionDocument {
    pub fn into_matrix(self) -> Result<TransitionMatrix> {
        let n = self.n_states;
        let build = |rows: &[Vec<[f64; 2]>]| -> Result<DMatrix<Complex64>> {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return config_err(format!("matrix is not {n}x{n}"));
            }
            Ok(DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
        };
        if self.energies.len() != n {
            return config_err("energies length does not match n_states");
        }
        Ok(TransitionMatrix { scales: self.scales, energies: self.energies, x: build(&self.x)?, p: build(&self.p)? })
    }
}

/// Ladder operator `a` on the first `n` oscillator states.
fn lowering(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if j == i + 1 { (j as f64).sqrt() } else { 0.0 })
}

/// Exact harmonic-oscillator matrices truncated to `n_states`.
pub fn oscillator_matrices(scales: &PhysicalScales, n_states: usize) -> Result<TransitionMatrix> {
    if n_states < 2 {
        return config_err("at least two states are required");
    }
    let PhysicalScales { hbar, m, omega0, .. } = *scales;
    let a = lowering(n_states);
    let ad = a.transpose();
    let lx = (hbar / (2.0 * m * omega0)).sqrt();
    let lp = (m * hbar * omega0 / 2.0).sqrt();
    let x = (&a + &ad) * lx;
    let p = (&ad - &a) * lp;
    Ok(TransitionMatrix {
        scales: *scales,
        energies: (0..n_states).map(|n| hbar * omega0 * (n as f64 + 0.5)).collect(),
        x: x.map(|v| Complex64::new(v, 0.0)),
        p: p.map(|v| Complex64::new(0.0, v)),
    })
}

struct Eigen {
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
}

/// Lowest eigenpairs of `H` in an oscillator basis of `basis` functions with
/// frequency `omega_b`. Polynomial powers of `x` are formed in a padded basis
/// so the truncated matrices are exact.
fn diagonalize_in_basis(scales: &PhysicalScales, v_coeffs: &[f64], omega_b: f64, basis: usize) -> Eigen {
    let PhysicalScales { hbar, m, .. } = *scales;
    let degree = v_coeffs.len().saturating_sub(1);
    let padded = basis + degree.max(2);
    let a = lowering(padded);
    let ad = a.transpose();
    let xb = (&a + &ad) * (hbar / (2.0 * m * omega_b)).sqrt();
    let pb = &ad - &a;

    let mut h = (&pb * &pb) * (-(m * hbar * omega_b / 2.0) / (2.0 * m));
    let mut power = DMatrix::<f64>::identity(padded, padded);
    for (j, &c) in v_coeffs.iter().enumerate() {
        if j > 0 {
            power = &power * &xb;
        }
        if c != 0.0 {
            h += &power * c;
        }
    }
    let h = h.view((0, 0), (basis, basis)).into_owned();
    let h = (&h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..basis).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut vectors = DMatrix::<f64>::zeros(basis, basis);
    for (col, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).into_owned();
        let lead = v.iter().cloned().fold(0.0f64, |acc, c| if c.abs() > acc.abs() + 1e-12 { c } else { acc });
        if lead < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(col, &v);
    }
    Eigen { energies: order.iter().map(|&i| eig.eigenvalues[i]).collect(), vectors }
}

/// Diagonalize `p²/2m + V` for the potential of `force` in an oscillator
/// basis of `basis_size` functions (frequency ω0), keeping the lowest
/// `basis_size / 4` states.
pub fn diagonalize_potential(scales: &PhysicalScales, force: &ForceModel, basis_size: usize) -> Result<TransitionMatrix> {
    scales.validate()?;
    let n_states = basis_size / 4;
    if n_states < 2 {
        return config_err(format!("basis_size = {basis_size} gives fewer than two states"));
    }
    let v = force.potential_coeffs();
    let omega_b = scales.omega0;
    let eig = diagonalize_in_basis(scales, &v, omega_b, basis_size);
    let check = diagonalize_in_basis(scales, &v, omega_b, basis_size + CONVERGENCE_STEP);
    let shift = (check.energies[0] - eig.energies[0]).abs();
    if !(shift <= CONVERGENCE_TOL) {
        return Err(SedError::Convergence(format!(
            "ground energy moves by {shift:e} when the basis grows from {basis_size} to {}",
            basis_size + CONVERGENCE_STEP
        )));
    }

    let PhysicalScales { hbar, m, .. } = *scales;
    let a = lowering(basis_size);
    let ad = a.transpose();
    let xb = (&a + &ad) * (hbar / (2.0 * m * omega_b)).sqrt();
    let pb = (&ad - &a) * (m * hbar * omega_b / 2.0).sqrt();
    let vecs = eig.vectors.columns(0, n_states);
    let x = vecs.transpose() * &xb * vecs;
    let p = vecs.transpose() * &pb * vecs;
    Ok(TransitionMatrix {
        scales: *scales,
        energies: eig.energies[..n_states].to_vec(),
        x: x.map(|v| Complex64::new(v, 0.0)),
        p: p.map(|v| Complex64::new(0.0, v)),
    })
}

/// `x̂p̂ − p̂x̂` in the truncated state space.
pub fn commutator_matrix(tm: &TransitionMatrix) -> DMatrix<Complex64> {
    &tm.x * &tm.p - &tm.p * &tm.x
}

/// Largest deviation of the leading `inner × inner` block of the commutator
/// from `iħ·I`.
pub fn commutator_deviation(tm: &TransitionMatrix, inner: usize) -> f64 {
    let c = commutator_matrix(tm);
    let ih = Complex64::new(0.0, tm.scales.hbar);
    let inner = inner.min(tm.n_states());
    let mut worst = 0.0f64;
    for i in 0..inner {
        for j in 0..inner {
            let target = if i == j { ih } else { Complex64::new(0.0, 0.0) };
            worst = worst.max((c[(i, j)] - target).norm());
        }
    }
    worst
}

/// A sum-rule value with an optional truncation warning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumRule {
    pub state: usize,
    pub value: f64,
    /// `ħ/2m`
    pub expected: f64,
    pub warning: Option<String>,
}

fn margin_warning(tm: &TransitionMatrix, n: usize) -> Result<Option<String>> {
    if n >= tm.n_states() {
        return config_err(format!("state {n} is outside the {} computed states", tm.n_states()));
    }
    if n >= tm.trusted() {
        let msg = format!("state {n} lies in the truncation margin (trusted states 0..{})", tm.trusted());
        warn!("{msg}");
        return Ok(Some(msg));
    }
    Ok(None)
}

/// `Σ_k ω_kn |x_nk|²`
pub fn trk_sum(tm: &TransitionMatrix, n: usize) -> Result<SumRule> {
    let warning = margin_warning(tm, n)?;
    let value = (0..tm.n_states()).map(|k| tm.omega(n, k) * tm.x[(n, k)].norm_sqr()).sum();
    Ok(SumRule { state: n, value, expected: tm.scales.hbar / (2.0 * tm.scales.m), warning })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Uncertainty {
    pub state: usize,
    /// `Σ_{k≠n} |x_nk|²`
    pub var_x: f64,
    /// `Σ_{k≠n} |p_nk|²`
    pub var_p: f64,
    pub product: f64,
    /// `ħ²/4`
    pub bound: f64,
    pub satisfied: bool,
    pub warning: Option<String>,
}

pub fn heisenberg_product(tm: &TransitionMatrix, n: usize) -> Result<Uncertainty> {
    let warning = margin_warning(tm, n)?;
    let (mut var_x, mut var_p) = (0.0, 0.0);
    for k in (0..tm.n_states()).filter(|&k| k != n) {
        var_x += tm.x[(n, k)].norm_sqr();
        var_p += tm.p[(n, k)].norm_sqr();
    }
    let product = var_x * var_p;
    let bound = tm.scales.hbar.powi(2) / 4.0;
    Ok(Uncertainty { state: n, var_x, var_p, product, bound, satisfied: product >= bound - 1e-10, warning })
}
