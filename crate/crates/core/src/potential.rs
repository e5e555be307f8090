//! Real one-periodic potentials stored as finite Fourier series
//! `p(x) = sum_l c_l exp(2 pi i l x)`.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

const REALITY_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-12;

/// Half-period symmetry classes of a one-periodic potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryKind {
    /// `p(x + 1/2) = p(x)`: only even frequencies.
    HalfPeriodEven,
    /// `p(x + 1/2) = -p(x)`: only odd frequencies.
    HalfPeriodOdd,
    None,
}

/// Outcome of a symmetry test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryCheck {
    pub holds: bool,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigPolynomial {
    coeffs: BTreeMap<i64, Complex64>,
}

/// Plain-text record form: one `(frequency, re, im)` triple per coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigRecord {
    pub terms: Vec<(i64, f64, f64)>,
}

impl TrigPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds a potential from a frequency map, rejecting non-real input.
    pub fn new(coeffs: BTreeMap<i64, Complex64>) -> Result<Self> {
        for (&l, &c) in &coeffs {
            let partner = coeffs.get(&-l).copied().unwrap_or_default();
            let defect = (partner - c.conj()).norm();
            if defect > REALITY_TOL * (1.0 + c.norm()) {
                return Err(Error::NotRealValued { freq: l, defect });
            }
        }
        let mut clean = BTreeMap::new();
        for (&l, &c) in &coeffs {
            let partner = coeffs.get(&-l).copied().unwrap_or_default();
            let sym = 0.5 * (c + partner.conj());
            if sym != Complex64::new(0.0, 0.0) {
                clean.insert(l, sym);
            }
        }
        Ok(Self { coeffs: clean })
    }

    pub fn from_pairs(pairs: &[(i64, Complex64)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for &(l, c) in pairs {
            *map.entry(l).or_insert_with(Complex64::default) += c;
        }
        Self::new(map)
    }

    /// `amplitude * cos(2 pi freq x)`.
    pub fn cosine(freq: i64, amplitude: f64) -> Self {
        if freq == 0 {
            return Self::constant(amplitude);
        }
        let half = Complex64::new(0.5 * amplitude, 0.0);
        Self::from_pairs(&[(freq, half), (-freq, half)]).expect("cosine is real")
    }

    pub fn constant(value: f64) -> Self {
        Self::from_pairs(&[(0, Complex64::new(value, 0.0))]).expect("constant is real")
    }

    pub fn coeff(&self, freq: i64) -> Complex64 {
        self.coeffs.get(&freq).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&l, &c)| (l, c))
    }

    pub fn bandwidth(&self) -> usize {
        self.coeffs.keys().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(&l, &c)| (c * Complex64::from_polar(1.0, 2.0 * PI * l as f64 * x)).re)
            .sum()
    }

    /// Phase shift `p_t(x) = p(x + t / 2 pi)`.
    pub fn translate(&self, t: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(&l, &c)| (l, c * Complex64::from_polar(1.0, l as f64 * t)))
            .collect();
        Self { coeffs }
    }

    pub fn scale(&self, factor: f64) -> Self {
        if factor == 0.0 {
            return Self::zero();
        }
        let coeffs = self.coeffs.iter().map(|(&l, &c)| (l, c * factor)).collect();
        Self { coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut coeffs = self.coeffs.clone();
        for (&l, &c) in &other.coeffs {
            *coeffs.entry(l).or_default() += c;
        }
        coeffs.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Self { coeffs }
    }

    /// Largest coefficient-wise distance to `other`.
    pub fn max_coeff_distance(&self, other: &Self) -> f64 {
        let keys: std::collections::BTreeSet<i64> =
            self.coeffs.keys().chain(other.coeffs.keys()).copied().collect();
        keys.into_iter()
            .map(|l| (self.coeff(l) - other.coeff(l)).norm())
            .fold(0.0, f64::max)
    }

    /// Sum of coefficient moduli, an upper bound for the sup norm.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    pub fn check_symmetry(&self, kind: SymmetryKind) -> SymmetryCheck {
        let forbidden_parity = match kind {
            SymmetryKind::HalfPeriodEven => 1,
            SymmetryKind::HalfPeriodOdd => 0,
            SymmetryKind::None => {
                return SymmetryCheck { holds: true, max_violation: 0.0 };
            }
        };
        let max_violation = self
            .coeffs
            .iter()
            .filter(|(&l, _)| l.rem_euclid(2) == forbidden_parity)
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max);
        SymmetryCheck { holds: max_violation <= SYMMETRY_TOL, max_violation }
    }

    pub fn to_record(&self) -> TrigRecord {
        TrigRecord { terms: self.coeffs.iter().map(|(&l, c)| (l, c.re, c.im)).collect() }
    }

    pub fn from_record(record: &TrigRecord) -> Result<Self> {
        let pairs: Vec<(i64, Complex64)> =
            record.terms.iter().map(|&(l, re, im)| (l, Complex64::new(re, im))).collect();
        Self::from_pairs(&pairs)
    }

    /// Fast pointwise evaluator for inner loops of ODE solvers.
    pub fn evaluator(&self) -> TrigEvaluator {
        let bw = self.bandwidth();
        let mut a = vec![0.0; bw + 1];
        let mut b = vec![0.0; bw + 1];
        a[0] = self.coeff(0).re;
        for l in 1..=bw {
            // c_l e^{i l th} + conj = 2 Re(c_l) cos(l th) - 2 Im(c_l) sin(l th)
            let c = self.coeff(l as i64);
            a[l] = 2.0 * c.re;
            b[l] = -2.0 * c.im;
        }
        TrigEvaluator { cos_coeffs: a, sin_coeffs: b }
    }
}

/// Real cosine/sine form of a [`TrigPolynomial`] evaluated by angle recurrence.
#[derive(Debug, Clone)]
pub struct TrigEvaluator {
    cos_coeffs: Vec<f64>,
    sin_coeffs: Vec<f64>,
}

impl TrigEvaluator {
    pub fn eval(&self, x: f64) -> f64 {
        let bw = self.cos_coeffs.len() - 1;
        let mut value = self.cos_coeffs[0];
        if bw == 0 {
            return value;
        }
        let (s1, c1) = (2.0 * PI * x).sin_cos();
        let (mut s, mut c) = (s1, c1);
        for l in 1..=bw {
            value += self.cos_coeffs[l] * c + self.sin_coeffs[l] * s;
            let next_c = c * c1 - s * s1;
            s = s * c1 + c * s1;
            c = next_c;
        }
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_map_is_zero_with_both_symmetries() {
        let p = TrigPolynomial::new(BTreeMap::new()).unwrap();
        assert!(p.is_zero());
        assert!(p.check_symmetry(SymmetryKind::HalfPeriodEven).holds);
        assert!(p.check_symmetry(SymmetryKind::HalfPeriodOdd).holds);
    }

    #[test]
    fn lone_imaginary_coefficient_is_rejected() {
        let err = TrigPolynomial::from_pairs(&[(1, Complex64::new(0.0, 1.0))]).unwrap_err();
        assert!(matches!(err, Error::NotRealValued { .. }));
    }

    #[test]
    fn odd_cosine_is_half_period_odd() {
        let eps: f64 = 0.3;
        let w = TrigPolynomial::cosine(3, 2.0 * eps.powi(4));
        assert!(w.check_symmetry(SymmetryKind::HalfPeriodOdd).holds);
        assert!((w.coeff(3).re - eps.powi(4)).abs() < 1e-16);
        assert!(TrigPolynomial::cosine(1, 2.0).check_symmetry(SymmetryKind::HalfPeriodOdd).holds);
    }

    #[test]
    fn mixed_parity_has_neither_symmetry() {
        let p = TrigPolynomial::cosine(1, 1.0).add(&TrigPolynomial::cosine(2, 1.0));
        assert!(!p.check_symmetry(SymmetryKind::HalfPeriodEven).holds);
        assert!(!p.check_symmetry(SymmetryKind::HalfPeriodOdd).holds);
    }

    #[test]
    fn even_example_potential() {
        let eps: f64 = 0.3;
        let (n, m) = (1, 3);
        let v = TrigPolynomial::cosine(n - m, eps * eps)
            .add(&TrigPolynomial::cosine(n - 1, eps.powi(3)));
        assert!(v.check_symmetry(SymmetryKind::HalfPeriodEven).holds);
    }

    #[test]
    fn translate_cosine_coefficients() {
        let t = 0.77;
        let p = TrigPolynomial::cosine(3, 2.0).translate(t);
        assert!((p.coeff(3) - Complex64::from_polar(1.0, 3.0 * t)).norm() < 1e-15);
        assert!((p.coeff(-3) - Complex64::from_polar(1.0, -3.0 * t)).norm() < 1e-15);
    }

    #[test]
    fn translate_by_zero_and_full_period() {
        let p = TrigPolynomial::cosine(2, 0.4).add(&TrigPolynomial::cosine(5, -1.1));
        assert!(p.translate(0.0).max_coeff_distance(&p) < 1e-15);
        assert!(p.translate(2.0 * PI).max_coeff_distance(&p) < 1e-13);
    }

    #[test]
    fn evaluator_matches_direct_sum() {
        let p = TrigPolynomial::from_pairs(&[
            (0, Complex64::new(0.3, 0.0)),
            (2, Complex64::new(0.1, -0.4)),
            (-2, Complex64::new(0.1, 0.4)),
            (5, Complex64::new(-0.2, 0.05)),
            (-5, Complex64::new(-0.2, -0.05)),
        ])
        .unwrap();
        let ev = p.evaluator();
        for i in 0..50 {
            let x = -3.0 + 0.137 * i as f64;
            assert!((ev.eval(x) - p.eval(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn record_round_trip_is_exact() {
        let p = TrigPolynomial::cosine(3, 0.0162).translate(1.234);
        let back = TrigPolynomial::from_record(&p.to_record()).unwrap();
        assert_eq!(back, p);
    }
}
