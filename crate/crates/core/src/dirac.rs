//! Dirac points at quasimomentum `pi` for half-period even potentials.

use crate::bloch::{self, index_to_k};
use crate::error::{Error, Result};
use crate::potential::{SymmetryKind, TrigPolynomial};
use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Splitting below which `(pi, E_n(pi))` counts as a Dirac point.
pub const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct DiracData {
    pub n: usize,
    pub cutoff: usize,
    pub e_star: f64,
    /// Even-index eigenvector, coefficient of `exp(i (pi + 2 pi k) x)` at slot `k + K`.
    pub phi_plus: DVector<Complex64>,
    /// Odd-index partner, the complex conjugate of `phi_plus` as a function.
    pub phi_minus: DVector<Complex64>,
    pub nu_star: f64,
    pub nu_f: f64,
    pub gap_residual: f64,
}

/// `phi_minus(x) = conj(phi_plus(x))`: coefficient `k` comes from `-k-1`.
pub fn conjugate_partner(phi: &DVector<Complex64>, cutoff: usize) -> DVector<Complex64> {
    let dim = phi.len();
    DVector::from_fn(dim, |i, _| {
        let src = -index_to_k(i, cutoff) - 1 + cutoff as i64;
        if src >= 0 && (src as usize) < dim {
            phi[src as usize].conj()
        } else {
            Complex64::default()
        }
    })
}

/// Rotate so that the largest coefficient is real and positive.
pub fn fix_gauge(v: &DVector<Complex64>) -> DVector<Complex64> {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].norm() > v[best].norm() {
            best = i;
        }
    }
    let c = v[best];
    if c.norm() == 0.0 {
        return v.clone();
    }
    let phase = c.conj() / c.norm();
    let mut out = v * phase;
    out[best] = Complex64::new(out[best].norm(), 0.0);
    out
}

/// `2 <phi, D_x phi>` for a vector in the `xi = pi` plane-wave basis.
pub fn velocity(phi: &DVector<Complex64>, cutoff: usize) -> f64 {
    2.0 * phi
        .iter()
        .enumerate()
        .map(|(i, c)| (PI + 2.0 * PI * index_to_k(i, cutoff) as f64) * c.norm_sqr())
        .sum::<f64>()
}

pub fn find_dirac_point(v: &TrigPolynomial, n: usize, cutoff: usize) -> Result<DiracData> {
    if n.is_multiple_of(2) {
        return Err(Error::ParameterViolation(format!("gap index {n} must be odd")));
    }
    let sym = v.check_symmetry(SymmetryKind::HalfPeriodEven);
    if !sym.holds {
        return Err(Error::SymmetryViolated(format!(
            "V must be half-period even (odd coefficient {:e})",
            sym.max_violation
        )));
    }
    let full = bloch::spectrum(&bloch::assemble_bloch(v, PI, cutoff)?, n + 1)?;
    let e_star = full.eigenvalues[n - 1];
    let gap_residual = (full.eigenvalues[n] - full.eigenvalues[n - 1]).abs();
    if gap_residual >= DEGENERACY_TOL {
        return Err(Error::NotDegenerate { gap: gap_residual });
    }
    let even = bloch::parity_block(v, PI, cutoff, 0)?;
    let j = n.div_ceil(2) - 1;
    if (even.eigenvalues[j] - e_star).abs() > 1e-7 * (1.0 + e_star.abs()) {
        return Err(Error::SolverFailure(format!(
            "even block level {} = {} does not match E_n(pi) = {}",
            j + 1,
            even.eigenvalues[j],
            e_star
        )));
    }
    let phi_plus = fix_gauge(&even.eigenvectors[j]);
    let phi_minus = conjugate_partner(&phi_plus, cutoff);
    let nu_star = velocity(&phi_plus, cutoff);
    let expected = if ((n - 1) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    if nu_star * expected <= 0.0 {
        return Err(Error::SignMismatch { n, nu: nu_star });
    }
    Ok(DiracData { n, cutoff, e_star, phi_plus, phi_minus, nu_star, nu_f: nu_star.abs(), gap_residual })
}

/// Dirac point with the default cutoff for gap `n`.
pub fn find_dirac_point_default(v: &TrigPolynomial, n: usize) -> Result<DiracData> {
    find_dirac_point(v, n, bloch::default_cutoff(v.bandwidth(), n + 1 + bloch::DISCARDED_BANDS))
}

impl DiracData {
    /// `sgn(nu_star)`.
    pub fn nu_sign(&self) -> f64 {
        self.nu_star.signum()
    }

    /// Largest residual of `(D_x^2 + V - E_star) phi` over both Dirac vectors.
    pub fn residual(&self, v: &TrigPolynomial) -> Result<f64> {
        let op = bloch::assemble_bloch(v, PI, self.cutoff)?;
        let a = op.apply_shifted(&self.phi_plus, self.e_star).norm();
        let b = op.apply_shifted(&self.phi_minus, self.e_star).norm();
        Ok(a.max(b))
    }

    /// Velocity recomputed from `phi_minus`, equal to `-nu_star`.
    pub fn velocity_from_minus(&self) -> f64 {
        velocity(&self.phi_minus, self.cutoff)
    }

    pub fn to_record(&self) -> DiracRecord {
        let coeffs = |v: &DVector<Complex64>| {
            v.iter()
                .enumerate()
                .filter(|(_, c)| c.norm() > 0.0)
                .map(|(i, c)| (index_to_k(i, self.cutoff), c.re, c.im))
                .collect()
        };
        DiracRecord {
            n: self.n,
            cutoff: self.cutoff,
            e_star: self.e_star,
            nu_star: self.nu_star,
            gap_residual: self.gap_residual,
            phi_plus: coeffs(&self.phi_plus),
            phi_minus: coeffs(&self.phi_minus),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiracRecord {
    pub n: usize,
    pub cutoff: usize,
    pub e_star: f64,
    pub nu_star: f64,
    pub gap_residual: f64,
    pub phi_plus: Vec<(i64, f64, f64)>,
    pub phi_minus: Vec<(i64, f64, f64)>,
}

/// `|slope of the even branch at pi - nu_star|` by central differences.
pub fn fermi_velocity_check(data: &DiracData, v: &TrigPolynomial, h: f64) -> Result<f64> {
    if !(1e-4..=1e-2).contains(&h) {
        return Err(Error::ParameterViolation(format!("step {h} outside [1e-4, 1e-2]")));
    }
    let j = data.n.div_ceil(2) - 1;
    let up = bloch::parity_block(v, PI + h, data.cutoff, 0)?.eigenvalues[j];
    let down = bloch::parity_block(v, PI - h, data.cutoff, 0)?.eigenvalues[j];
    Ok(((up - down) / (2.0 * h) - data.nu_star).abs())
}
