//! Two-band models near the Dirac point.
//!
//! `M_delta(xi, t) = [[E + nu (xi - pi), delta conj(theta)], [delta theta, E - nu (xi - pi)]]`
//! and its rescaled form `[[xi, conj(theta)], [theta, -xi]]`.

use crate::bloch;
use crate::bulk::family_potential;
use crate::coupling::{self, CouplingSeries};
use crate::dirac::DiracData;
use crate::error::{Error, Result};
use crate::potential::TrigPolynomial;
use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use std::f64::consts::PI;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn sigma1() -> Matrix2<Complex64> {
    Matrix2::new(c(0.0), c(1.0), c(1.0), c(0.0))
}

pub fn sigma2() -> Matrix2<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    Matrix2::new(c(0.0), i, -i, c(0.0))
}

pub fn sigma3() -> Matrix2<Complex64> {
    Matrix2::new(c(1.0), c(0.0), c(0.0), c(-1.0))
}

/// `[[0, conj z], [z, 0]]`.
pub fn sigma_of(z: Complex64) -> Matrix2<Complex64> {
    Matrix2::new(c(0.0), z.conj(), z, c(0.0))
}

#[derive(Debug, Clone)]
pub struct TightBindingFamily {
    pub e_star: f64,
    pub nu_star: f64,
    pub delta: f64,
    pub theta: CouplingSeries,
}

/// Eigen-decomposition of a traceless-plus-scalar Hermitian 2x2 matrix.
#[derive(Debug, Clone)]
pub struct TwoBandEigen {
    pub matrix: Matrix2<Complex64>,
    pub mu_minus: f64,
    pub mu_plus: f64,
    pub v_minus: Vector2<Complex64>,
    pub v_plus: Vector2<Complex64>,
}

/// Eigenpairs of `center + [[a, conj b], [b, -a]]`.
fn two_band(center: f64, a: f64, b: Complex64) -> TwoBandEigen {
    let r = (a * a + b.norm_sqr()).sqrt();
    let vec_for = |lam: f64| {
        let first = Vector2::new(b.conj(), c(lam - a));
        let second = Vector2::new(c(lam + a), b);
        let v = if first.norm() >= second.norm() { first } else { second };
        if v.norm() == 0.0 {
            // b = 0 and a = 0: any basis works
            if lam < 0.0 { Vector2::new(c(0.0), c(1.0)) } else { Vector2::new(c(1.0), c(0.0)) }
        } else {
            v / c(v.norm())
        }
    };
    let (v_minus, v_plus) = if r == 0.0 {
        (Vector2::new(c(0.0), c(1.0)), Vector2::new(c(1.0), c(0.0)))
    } else {
        (vec_for(-r), vec_for(r))
    };
    let matrix = Matrix2::new(c(center + a), b.conj(), b, c(center - a));
    TwoBandEigen { matrix, mu_minus: center - r, mu_plus: center + r, v_minus, v_plus }
}

impl TightBindingFamily {
    pub fn new(data: &DiracData, w: &TrigPolynomial, delta: f64) -> Result<Self> {
        if delta <= 0.0 {
            return Err(Error::ParameterViolation(format!("delta {delta} must be positive")));
        }
        Ok(Self { e_star: data.e_star, nu_star: data.nu_star, delta, theta: coupling::theta_series(data, w)? })
    }

    /// `r_delta(xi, t)`.
    pub fn radius(&self, xi: f64, t: f64) -> f64 {
        let a = self.nu_star * (xi - PI);
        let b = self.delta * self.theta.eval(t).norm();
        (a * a + b * b).sqrt()
    }

    pub fn m_delta(&self, xi: f64, t: f64) -> TwoBandEigen {
        two_band(self.e_star, self.nu_star * (xi - PI), self.theta.eval(t) * self.delta)
    }

    /// `sigma_star = [[0, conj theta_star], [theta_star, 0]]`.
    pub fn sigma_star(&self) -> Matrix2<Complex64> {
        sigma_of(self.theta.eval(PI))
    }
}

pub fn rescaled_family(theta: &CouplingSeries, xi: f64, t: f64) -> TwoBandEigen {
    two_band(0.0, xi, theta.eval(t))
}

/// Closed-form curvature `i r^2 phi' / (2 (xi^2 + r^2)^{3/2})` of the lower band of the rescaled family.
pub fn curvature_closed_form(theta: &CouplingSeries, xi: f64, t: f64) -> Result<Complex64> {
    let z = theta.eval(t);
    let r = z.norm();
    if r <= coupling::H2_TOL {
        return Err(Error::H2Violated { min_modulus: r, t });
    }
    let phase_rate = theta.phase_velocity(t);
    let value = r * r * phase_rate / (2.0 * (xi * xi + r * r).powf(1.5));
    Ok(Complex64::new(0.0, value))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(order);
    for i in 0..order {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if order == 1 {
                p1 = x;
                p0 = 1.0;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `(1 / 2 pi i)` times the integral of the curvature over `R x [0, 2 pi]`.
///
/// The `xi` integral over `[-Xi, Xi]` uses Gauss-Legendre nodes in the variable
/// `atan(xi / r)`; the two tails beyond `Xi` are added in closed form.
pub fn curvature_integral(theta: &CouplingSeries, half_width: f64, n_t: usize) -> Result<f64> {
    let max_mod = (0..256)
        .map(|i| theta.eval(2.0 * PI * i as f64 / 256.0).norm())
        .fold(0.0, f64::max);
    if half_width < 50.0 * max_mod {
        return Err(Error::ParameterViolation(format!(
            "half width {half_width} below 50 max|theta| = {}",
            50.0 * max_mod
        )));
    }
    let rule = gauss_legendre(48);
    let mut total = 0.0;
    for j in 0..n_t {
        let t = 2.0 * PI * j as f64 / n_t as f64;
        let r = theta.eval(t).norm();
        let top = (half_width / r).atan();
        let mut inner = 0.0;
        for &(x, wgt) in &rule {
            let ang = top * x;
            let xi = r * ang.tan();
            let jac = r / ang.cos().powi(2);
            inner += wgt * top * jac * curvature_closed_form(theta, xi, t)?.im;
        }
        let tail = 0.5 * r * r * theta.phase_velocity(t) * (2.0 / (r * r)) * (1.0 - half_width / (half_width * half_width + r * r).sqrt());
        total += (inner + tail) * (2.0 * PI / n_t as f64);
    }
    // (1 / 2 pi i) * (i * total)
    Ok(total / (2.0 * PI))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnclosureReport {
    /// `max |lambda_n - mu_minus| / r_delta`.
    pub lower_excursion: f64,
    /// `max |lambda_{n+1} - mu_plus| / r_delta`.
    pub upper_excursion: f64,
    pub max_lower_deviation: f64,
    pub max_upper_deviation: f64,
}

/// Compares the two bands around the Dirac point with the tight-binding pair on a grid.
pub fn enclosure_check(
    v: &TrigPolynomial,
    w: &TrigPolynomial,
    data: &DiracData,
    delta: f64,
    xi_grid: &[f64],
    t_grid: &[f64],
) -> Result<EnclosureReport> {
    let fam = TightBindingFamily::new(data, w, delta)?;
    let cutoff = bloch::default_cutoff(v.bandwidth().max(w.bandwidth()), data.n + 1 + bloch::DISCARDED_BANDS);
    let mut rep = EnclosureReport {
        lower_excursion: 0.0,
        upper_excursion: 0.0,
        max_lower_deviation: 0.0,
        max_upper_deviation: 0.0,
    };
    for &t in t_grid {
        let p = family_potential(v, w, delta, t);
        for &xi in xi_grid {
            let ev = bloch::spectrum(&bloch::assemble_bloch(&p, xi, cutoff)?, data.n + 1)?.eigenvalues;
            let tb = fam.m_delta(xi, t);
            let r = fam.radius(xi, t);
            let dl = (ev[data.n - 1] - tb.mu_minus).abs();
            let du = (ev[data.n] - tb.mu_plus).abs();
            rep.max_lower_deviation = rep.max_lower_deviation.max(dl);
            rep.max_upper_deviation = rep.max_upper_deviation.max(du);
            rep.lower_excursion = rep.lower_excursion.max(dl / r);
            rep.upper_excursion = rep.upper_excursion.max(du / r);
        }
    }
    Ok(rep)
}
