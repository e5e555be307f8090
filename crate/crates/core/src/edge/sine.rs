//! Dirichlet sine basis `e_k(x) = L^{-1/2} sin(k pi (x + L) / (2 L))` on `[-L, L]`.
//!
//! Potential matrix elements reduce to cosine moments
//! `C_m = (1 / 2L) int q(x) cos(m pi (x + L) / (2 L)) dx`, giving
//! `H_jk = (k pi / 2L)^2 delta_jk + C_{|j - k|} - C_{j + k}`.

use super::LinePotential;
use crate::error::{Error, Result};
use crate::tight_binding::gauss_legendre;
use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

const GL_ORDER: usize = 8;

fn cosine_moments(pot: &LinePotential, half_length: f64, count: usize, max_freq: f64) -> Vec<f64> {
    let rule = gauss_legendre(GL_ORDER);
    // panels split at x = 0 so a step discontinuity sits on a panel boundary
    let target = (2.5 / max_freq).min(0.25);
    let per_side = (half_length / target).ceil() as usize;
    let width = half_length / per_side as f64;
    let mut moments = vec![0.0; count];
    let base = PI / (2.0 * half_length);
    for p in 0..2 * per_side {
        let a = -half_length + p as f64 * width;
        for &(node, weight) in &rule {
            let x = a + 0.5 * width * (node + 1.0);
            let side = if x < 0.0 { super::Side::Left } else { super::Side::Right };
            let fq = pot.eval_side(x, side) * weight * 0.5 * width / (2.0 * half_length);
            let (s1, c1) = (base * (x + half_length)).sin_cos();
            let (mut s, mut c) = (0.0, 1.0);
            for m in moments.iter_mut() {
                *m += fq * c;
                let nc = c * c1 - s * s1;
                s = s * c1 + c * s1;
                c = nc;
            }
        }
    }
    moments
}

/// Dense matrix of the truncated operator in the first `modes` sine functions.
pub fn assemble(pot: &LinePotential, half_length: f64, modes: usize, bandwidth: usize) -> DMatrix<f64> {
    let k_max = modes as f64 * PI / half_length + 2.0 * PI * bandwidth as f64;
    let c = cosine_moments(pot, half_length, 2 * modes + 2, k_max);
    DMatrix::from_fn(modes, modes, |j, k| {
        let (j, k) = (j + 1, k + 1);
        let kin = if j == k { (k as f64 * PI / (2.0 * half_length)).powi(2) } else { 0.0 };
        kin + c[j.abs_diff(k)] - c[j + k]
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineState {
    pub energy: f64,
    pub center: f64,
    pub ipr: f64,
}

/// Eigenpairs with energies in `(lo, hi)`, with localization center and inverse participation ratio.
pub fn states_in(matrix: &DMatrix<f64>, half_length: f64, lo: f64, hi: f64) -> Result<Vec<SineState>> {
    let modes = matrix.nrows();
    let eig = SymmetricEigen::try_new(matrix.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::SolverFailure("dense symmetric eigensolver did not converge".into()))?;
    crate::bloch::count_eigensolve();
    // Rayleigh quotients keep each energy attached to its own vector
    let mv = matrix * &eig.eigenvectors;
    let energies: Vec<f64> = (0..modes).map(|i| eig.eigenvectors.column(i).dot(&mv.column(i))).collect();
    let samples_per_unit = (2.0 * modes as f64 / half_length).max(8.0);
    let n_pts = (2.0 * half_length * samples_per_unit) as usize;
    let dx = 2.0 * half_length / n_pts as f64;
    let base = PI / (2.0 * half_length);
    let mut out = Vec::new();
    for (idx, &e) in energies.iter().enumerate() {
        if !(e > lo && e < hi) {
            continue;
        }
        let coeffs = eig.eigenvectors.column(idx);
        let (mut w0, mut w1, mut w2) = (0.0, 0.0, 0.0);
        for p in 1..n_pts {
            let x = -half_length + p as f64 * dx;
            let (s1, c1) = (base * (x + half_length)).sin_cos();
            let (mut s, mut c) = (s1, c1);
            let mut psi = 0.0;
            for k in 0..modes {
                psi += coeffs[k] * s;
                let nc = c * c1 - s * s1;
                s = s * c1 + c * s1;
                c = nc;
            }
            let d = psi * psi;
            w0 += d;
            w1 += x * d;
            w2 += d * d;
        }
        out.push(SineState { energy: e, center: w1 / w0, ipr: w2 / (w0 * w0 * dx) });
    }
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(out)
}
