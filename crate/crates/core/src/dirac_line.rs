//! Effective Dirac operators `nu sigma3 D_x + chi_-(x) sigma(c_L) + chi_+(x) sigma(c_R)` on the line,
//! where `sigma(c) = [[0, conj c], [c, 0]]`.
//!
//! Bound states are found by shooting. On each side the constant-coefficient
//! system has exactly one decaying direction for `|E|` below the gap edge. Since
//! `u^* sigma3 u` is conserved and vanishes for decaying solutions, both
//! components have equal modulus, and matching reduces to equality of the
//! relative phase `arg(u1 / u2)` coming from the left and from the right.

use crate::coupling::CouplingSeries;
use crate::error::{Error, Result};
use crate::flow::{self, FlowSample, FlowTrace, TrackingOptions};
use crate::ode::{self, Tolerance};
use crate::roots;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TransitionProfile {
    Step,
    Tanh { width: f64 },
}

impl TransitionProfile {
    /// `chi_+(x)`, rising from 0 on the left to 1 on the right.
    pub fn chi_plus(&self, x: f64) -> f64 {
        match *self {
            TransitionProfile::Step => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    0.0
                } else {
                    0.5
                }
            }
            TransitionProfile::Tanh { width } => 0.5 * (1.0 + (x / width).tanh()),
        }
    }

    pub fn chi_minus(&self, x: f64) -> f64 {
        1.0 - self.chi_plus(x)
    }

    /// `kappa = chi_+ - chi_-`.
    pub fn kappa(&self, x: f64) -> f64 {
        2.0 * self.chi_plus(x) - 1.0
    }

    /// Half-length outside of which the profile equals its limits to double precision.
    pub fn support_half_length(&self) -> f64 {
        match *self {
            TransitionProfile::Step => 0.0,
            TransitionProfile::Tanh { width } => 20.0 * width,
        }
    }

    pub fn rescaled(&self, factor: f64) -> Self {
        match *self {
            TransitionProfile::Step => TransitionProfile::Step,
            TransitionProfile::Tanh { width } => TransitionProfile::Tanh { width: width * factor },
        }
    }
}

/// Closed-form in-gap eigenvalue for the step profile and coupling `-theta_star e^{it}` on the right.
pub fn step_eigenvalue(t: f64, nu_star: f64, theta_star: Complex64) -> Result<f64> {
    if !(t > 0.0 && t < 2.0 * PI) {
        return Err(Error::OutOfRange { t });
    }
    Ok(nu_star.signum() * theta_star.norm() * (t / 2.0).cos())
}

/// One member of the family, frozen at a value of `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiracLineOperator {
    pub nu: f64,
    pub left: Complex64,
    pub right: Complex64,
    pub profile: TransitionProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    ClosedForm,
    Shooting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiracSpectrum {
    pub eigenvalues: Vec<f64>,
    pub gap_edge: f64,
    pub method: Method,
}

const SCAN_POINTS: usize = 64;
const MAX_SCAN_DEPTH: usize = 12;
const EDGE_MARGIN: f64 = 1e-4;
const ROOT_TOL: f64 = 1e-12;

/// Operator in units where the left coupling has modulus one and `|nu| = 1`.
struct Scaled {
    sign: f64,
    left: Complex64,
    right: Complex64,
    profile: TransitionProfile,
    scale: f64,
}

impl DiracLineOperator {
    /// `min(|c_L|, |c_R|)`.
    pub fn gap_edge(&self) -> f64 {
        self.left.norm().min(self.right.norm())
    }

    fn scaled(&self) -> Scaled {
        let scale = self.left.norm();
        Scaled {
            sign: self.nu.signum(),
            left: self.left / scale,
            right: self.right / scale,
            profile: self.profile.rescaled(scale / self.nu.abs()),
            scale,
        }
    }

    /// Relative phase mismatch `arg(u_R1/u_R2) - arg(u_L1/u_L2)` at the junction.
    pub fn phase_mismatch(&self, energy: f64) -> Result<f64> {
        let edge = self.gap_edge();
        if energy.abs() >= edge {
            return Err(Error::NoDecayingDirection { energy, edge });
        }
        let s = self.scaled();
        s.mismatch(energy / s.scale)
    }
}

fn to_real(u: [Complex64; 2]) -> [f64; 4] {
    [u[0].re, u[0].im, u[1].re, u[1].im]
}

fn from_real(y: [f64; 4]) -> [Complex64; 2] {
    [Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])]
}

impl Scaled {
    /// Decaying direction: growth rate `+lambda` on the left, `-lambda` on the right.
    fn direction(&self, c: Complex64, e: f64, grow: bool) -> [Complex64; 2] {
        let lam = (c.norm_sqr() - e * e).sqrt();
        let a = if grow { lam } else { -lam };
        [c.conj(), Complex64::new(e, self.sign * a)]
    }

    fn propagate(&self, e: f64, from: f64, to: f64, u: [Complex64; 2]) -> Result<[Complex64; 2]> {
        let width = match self.profile {
            TransitionProfile::Step => return Ok(u),
            TransitionProfile::Tanh { width } => width,
        };
        let (cl, cr, sg, prof) = (self.left, self.right, self.sign, self.profile);
        let rhs = move |x: f64, y: &[f64; 4]| {
            let m = cl * prof.chi_minus(x) + cr * prof.chi_plus(x);
            let u = from_real(*y);
            let i = Complex64::new(0.0, sg);
            let d0 = i * (u[0] * e - m.conj() * u[1]);
            let d1 = i * (m * u[0] - u[1] * e);
            to_real([d0, d1])
        };
        let tol = Tolerance { rtol: 1e-12, atol: 1e-14, h_max: 0.25 * width.max(1e-300) };
        let norm = (u[0].norm_sqr() + u[1].norm_sqr()).sqrt();
        let start = to_real([u[0] / norm, u[1] / norm]);
        Ok(from_real(ode::integrate(rhs, from, start, to, tol)?))
    }

    fn mismatch(&self, e: f64) -> Result<f64> {
        let x = self.profile.support_half_length();
        let ul = self.propagate(e, -x, 0.0, self.direction(self.left, e, true))?;
        let ur = self.propagate(e, x, 0.0, self.direction(self.right, e, false))?;
        let phase = |u: [Complex64; 2]| (u[0] / u[1]).arg();
        Ok(phase(ur) - phase(ul))
    }
}

fn wrap_near(value: f64, anchor: f64) -> f64 {
    value - 2.0 * PI * ((value - anchor) / (2.0 * PI)).round()
}

/// In-gap eigenvalues by phase matching: a scan refined until the unwrapped mismatch
/// moves by less than a quarter turn per step, then Brent on each bracketed sign change.
pub fn dirac_bound_states(op: &DiracLineOperator) -> Result<DiracSpectrum> {
    let edge = op.gap_edge();
    if edge <= 0.0 {
        return Err(Error::NoDecayingDirection { energy: 0.0, edge });
    }
    let s = op.scaled();
    let g = edge / s.scale;
    let top = g * (1.0 - EDGE_MARGIN);
    let mut grid: Vec<f64> = (0..=SCAN_POINTS).map(|k| -top + 2.0 * top * k as f64 / SCAN_POINTS as f64).collect();
    for j in 1..=8 {
        let d = g * 10f64.powf(-2.0 - 2.0 * j as f64 / 8.0).max(EDGE_MARGIN);
        grid.push(-g + d);
        grid.push(g - d);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let raw: Vec<f64> = grid.iter().map(|&e| s.mismatch(e)).collect::<Result<_>>()?;
    let mut scan: Vec<(f64, f64)> = vec![(grid[0], raw[0])];
    let mut stack: Vec<((f64, f64), usize)> = grid[1..].iter().zip(&raw[1..]).rev().map(|(&e, &d)| ((e, d), 0)).collect();
    while let Some(((e, d), depth)) = stack.pop() {
        let &(e_prev, d_prev) = scan.last().unwrap();
        let v = wrap_near(d, d_prev);
        if (v - d_prev).abs() < 0.25 * PI || depth >= MAX_SCAN_DEPTH {
            scan.push((e, v));
            continue;
        }
        let em = 0.5 * (e_prev + e);
        stack.push(((e, d), depth + 1));
        stack.push(((em, s.mismatch(em)?), depth + 1));
    }
    let f = |d: f64| (0.5 * d).sin();
    let mut roots = Vec::new();
    for w in scan.windows(2) {
        let ((a, da), (b, db)) = (w[0], w[1]);
        let (fa, fb) = (f(da), f(db));
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa * fb > 0.0 {
            continue;
        }
        if fb == 0.0 {
            continue;
        }
        let h = |e: f64| s.mismatch(e).map(|d| f(wrap_near(d, da)));
        roots.push(roots::brent(h, a, b, ROOT_TOL)?);
    }
    if let Some(&(last, dl)) = scan.last() {
        if f(dl) == 0.0 {
            roots.push(last);
        }
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < 10.0 * ROOT_TOL);
    Ok(DiracSpectrum {
        eigenvalues: roots.into_iter().map(|e| e * s.scale).collect(),
        gap_edge: edge,
        method: Method::Shooting,
    })
}

/// A `t`-family: fixed left coupling, right coupling given by a Fourier series in `t`.
#[derive(Debug, Clone)]
pub struct DiracLineFamily {
    pub nu: f64,
    pub left: Complex64,
    pub right: CouplingSeries,
    pub profile: TransitionProfile,
}

impl DiracLineFamily {
    /// `nu sigma3 D_x - chi_- sigma_star + chi_+ sigma(theta(t))`.
    pub fn effective(nu_star: f64, theta: &CouplingSeries, profile: TransitionProfile) -> Self {
        Self { nu: nu_star, left: -theta.eval(PI), right: theta.clone(), profile }
    }

    /// `sgn(nu) sigma3 D_x - chi_- sigma_star - chi_+ sigma(theta_star e^{imt})`.
    pub fn model(nu_sign: f64, theta_star: Complex64, m: i64, profile: TransitionProfile) -> Self {
        Self { nu: nu_sign.signum(), left: -theta_star, right: CouplingSeries::monomial(m, -theta_star), profile }
    }

    pub fn at(&self, t: f64) -> DiracLineOperator {
        DiracLineOperator { nu: self.nu, left: self.left, right: self.right.eval(t), profile: self.profile }
    }

    pub fn conj(&self) -> Self {
        Self { nu: self.nu, left: self.left.conj(), right: self.right.conj(), profile: self.profile }
    }
}

/// Signed count of downward crossings of zero over `t in [0, 2 pi]`.
pub fn dirac_spectral_flow(family: &DiracLineFamily, samples: usize) -> Result<FlowTrace> {
    let grid: Vec<f64> = (0..=samples).map(|i| 2.0 * PI * i as f64 / samples as f64).collect();
    let sample = |t: f64| -> Result<FlowSample> {
        let spectrum = dirac_bound_states(&family.at(t))?;
        let n = spectrum.eigenvalues.len();
        Ok(FlowSample {
            t,
            reference: 0.0,
            lower: -spectrum.gap_edge,
            upper: spectrum.gap_edge,
            roots: spectrum.eigenvalues,
            centers: vec![f64::NAN; n],
            excluded: Vec::new(),
        })
    };
    flow::track(sample, &grid, TrackingOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let one = Complex64::new(1.0, 0.0);
        assert!(step_eigenvalue(PI, 1.0, one).unwrap().abs() < 1e-16);
        assert!((step_eigenvalue(PI / 2.0, 2.0, one).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((step_eigenvalue(PI / 2.0, -2.0, one).unwrap() + 0.5f64.sqrt()).abs() < 1e-15);
        assert!(matches!(step_eigenvalue(0.0, 1.0, one), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn profile_limits() {
        let p = TransitionProfile::Tanh { width: 0.5 };
        assert!(p.chi_plus(50.0) == 1.0 && p.chi_plus(-50.0) == 0.0);
        assert!((p.chi_plus(0.3) + p.chi_minus(0.3) - 1.0).abs() < 1e-16);
        assert!(p.kappa(-3.0) < 0.0 && p.kappa(3.0) > 0.0);
    }

    #[test]
    fn step_shooting_matches_closed_form() {
        let ts = Complex64::from_polar(0.7, 0.4);
        let fam = DiracLineFamily::model(1.0, ts, 1, TransitionProfile::Step);
        for &t in &[0.5, PI / 2.0, 2.0, 4.0] {
            let spectrum = dirac_bound_states(&fam.at(t)).unwrap();
            assert_eq!(spectrum.eigenvalues.len(), 1, "t = {t}");
            assert!((spectrum.eigenvalues[0] - step_eigenvalue(t, 1.0, ts).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn outside_gap_has_no_decaying_direction() {
        let op = DiracLineFamily::model(1.0, Complex64::new(1.0, 0.0), 1, TransitionProfile::Step).at(1.0);
        assert!(matches!(op.phase_mismatch(1.5), Err(Error::NoDecayingDirection { .. })));
    }

    #[test]
    fn model_flow_equals_winding_times_sign() {
        let ts = Complex64::from_polar(0.3, 1.0);
        let one = dirac_spectral_flow(&DiracLineFamily::model(1.0, ts, 1, TransitionProfile::Step), 32).unwrap();
        assert_eq!(one.total, 1);
        let three = dirac_spectral_flow(&DiracLineFamily::model(1.0, ts, 3, TransitionProfile::Step), 48).unwrap();
        assert_eq!(three.total, 3);
        let neg = dirac_spectral_flow(&DiracLineFamily::model(-1.0, ts, 1, TransitionProfile::Step), 32).unwrap();
        assert_eq!(neg.total, -1);
    }
}
