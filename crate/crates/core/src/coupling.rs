//! The coupling curve `theta(t) = <phi_minus, W_t phi_plus>` and its winding number.
//!
//! Because `W` is a trigonometric polynomial, `theta` is one as well:
//! `theta(t) = sum_l a_l exp(i l t)`, which [`CouplingSeries`] stores exactly.

use crate::dirac::DiracData;
use crate::error::{Error, Result};
use crate::potential::{SymmetryKind, TrigPolynomial};
use nalgebra::DVector;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Modulus below which hypothesis (H2) is considered to fail.
pub const H2_TOL: f64 = 1e-8;
const INITIAL_SAMPLES: usize = 64;
const MAX_REFINEMENT_DEPTH: usize = 40;

/// Exact Fourier form of a matrix element `t -> <f, W_t g>`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSeries {
    pub terms: Vec<(i64, Complex64)>,
}

impl CouplingSeries {
    pub fn eval(&self, t: f64) -> Complex64 {
        self.terms.iter().map(|&(l, a)| a * Complex64::from_polar(1.0, l as f64 * t)).sum()
    }

    pub fn derivative(&self, t: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|&(l, a)| a * Complex64::new(0.0, l as f64) * Complex64::from_polar(1.0, l as f64 * t))
            .sum()
    }

    /// `d/dt arg theta(t)`.
    pub fn phase_velocity(&self, t: f64) -> f64 {
        (self.derivative(t) / self.eval(t)).im
    }

    pub fn conj(&self) -> Self {
        Self { terms: self.terms.iter().map(|&(l, a)| (-l, a.conj())).collect() }
    }

    pub fn scale(&self, w: Complex64) -> Self {
        Self { terms: self.terms.iter().map(|&(l, a)| (l, a * w)).collect() }
    }

    /// `e^{i m t} c`, the coupling of the model Dirac family.
    pub fn monomial(m: i64, c: Complex64) -> Self {
        Self { terms: vec![(m, c)] }
    }
}

/// `t -> <f, W_t g>` for coefficient vectors at the same quasimomentum.
pub fn matrix_element_series(f: &DVector<Complex64>, w: &TrigPolynomial, g: &DVector<Complex64>) -> CouplingSeries {
    let dim = f.len() as i64;
    let mut terms = Vec::new();
    for (l, c) in w.terms() {
        let mut acc = Complex64::default();
        for j in 0..dim {
            let k = j - l;
            if (0..dim).contains(&k) {
                acc += f[j as usize].conj() * g[k as usize];
            }
        }
        if acc != Complex64::default() {
            terms.push((l, acc * c));
        }
    }
    CouplingSeries { terms }
}

fn require_odd(w: &TrigPolynomial) -> Result<()> {
    let sym = w.check_symmetry(SymmetryKind::HalfPeriodOdd);
    if sym.holds {
        Ok(())
    } else {
        Err(Error::SymmetryViolated(format!(
            "W must be half-period odd (even coefficient {:e})",
            sym.max_violation
        )))
    }
}

pub fn theta_series(data: &DiracData, w: &TrigPolynomial) -> Result<CouplingSeries> {
    require_odd(w)?;
    Ok(matrix_element_series(&data.phi_minus, w, &data.phi_plus))
}

pub fn theta(data: &DiracData, w: &TrigPolynomial, t: f64) -> Result<Complex64> {
    Ok(theta_series(data, w)?.eval(t))
}

/// Largest diagonal entry of `W_t` in the Dirac basis.
pub fn diagonal_check(data: &DiracData, w: &TrigPolynomial, t: f64) -> Result<f64> {
    require_odd(w)?;
    let pp = matrix_element_series(&data.phi_plus, w, &data.phi_plus).eval(t).norm();
    let mm = matrix_element_series(&data.phi_minus, w, &data.phi_minus).eval(t).norm();
    Ok(pp.max(mm))
}

#[derive(Debug, Clone)]
pub struct CouplingCurve {
    pub samples: Vec<(f64, Complex64)>,
    pub winding: i64,
    pub min_modulus: f64,
    pub theta_star: Complex64,
    pub theta_f: f64,
    pub series: CouplingSeries,
}

impl CouplingCurve {
    /// Largest `|theta(t + pi) + theta(t)|` over the samples.
    pub fn antiperiodicity_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(|&(t, z)| (self.series.eval(t + PI) + z).norm())
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "re_theta", "im_theta", "arg_theta"]).map_err(crate::bloch::csv_err)?;
        for &(t, z) in &self.samples {
            w.write_record([t, z.re, z.im, z.arg()].map(crate::bloch::fmt)).map_err(crate::bloch::csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples `[0, 2 pi]` from 64 points, bisecting until every phase step is below a quarter turn.
pub fn sample_curve(series: &CouplingSeries) -> Result<Vec<(f64, Complex64)>> {
    let mut samples: Vec<(f64, Complex64)> = (0..=INITIAL_SAMPLES)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / INITIAL_SAMPLES as f64;
            (t, series.eval(t))
        })
        .collect();
    for _ in 0..MAX_REFINEMENT_DEPTH {
        check_h2(&samples)?;
        let mut refined = Vec::with_capacity(samples.len() * 2);
        let mut changed = false;
        for pair in samples.windows(2) {
            refined.push(pair[0]);
            if (pair[1].1 / pair[0].1).arg().abs() >= PI / 2.0 {
                let t = 0.5 * (pair[0].0 + pair[1].0);
                refined.push((t, series.eval(t)));
                changed = true;
            }
        }
        refined.push(*samples.last().unwrap());
        samples = refined;
        if !changed {
            return Ok(samples);
        }
    }
    Err(Error::CurveUnderresolved { index: 0, next: samples.len() - 1 })
}

fn check_h2(samples: &[(f64, Complex64)]) -> Result<f64> {
    let (t, min) = samples
        .iter()
        .map(|&(t, z)| (t, z.norm()))
        .fold((0.0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    if min <= H2_TOL {
        return Err(Error::H2Violated { min_modulus: min, t });
    }
    Ok(min)
}

/// Winding number of a closed sampled curve.
pub fn winding_number(samples: &[(f64, Complex64)]) -> Result<i64> {
    check_h2(samples)?;
    let mut total = 0.0;
    for (i, pair) in samples.windows(2).enumerate() {
        let step = (pair[1].1 / pair[0].1).arg();
        if step.abs() >= PI / 2.0 {
            return Err(Error::CurveUnderresolved { index: i, next: i + 1 });
        }
        total += step;
    }
    let raw = total / (2.0 * PI);
    let m = raw.round();
    if (raw - m).abs() > 1e-6 {
        return Err(Error::NotQuantized { raw });
    }
    let m = m as i64;
    if m % 2 == 0 {
        return Err(Error::NotOdd { winding: m });
    }
    Ok(m)
}

pub fn coupling_curve_from_series(series: CouplingSeries) -> Result<CouplingCurve> {
    let samples = sample_curve(&series)?;
    let min_modulus = check_h2(&samples)?;
    let winding = winding_number(&samples)?;
    let theta_star = series.eval(PI);
    Ok(CouplingCurve { samples, winding, min_modulus, theta_star, theta_f: theta_star.norm(), series })
}

pub fn coupling_curve(data: &DiracData, w: &TrigPolynomial) -> Result<CouplingCurve> {
    coupling_curve_from_series(theta_series(data, w)?)
}
