//! Symmetric pentadiagonal matrices: inertia by `L D L^T`, bisection, inverse iteration.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Pentadiagonal {
    pub diag: Vec<f64>,
    /// `A[i][i+1]`.
    pub off1: Vec<f64>,
    /// `A[i][i+2]`.
    pub off2: Vec<f64>,
}

impl Pentadiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        match j - i {
            0 => self.diag[i],
            1 => self.off1[i],
            2 => self.off2[i],
            _ => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i + 1 < n {
                s += self.off1[i] * x[i + 1];
            }
            if i + 2 < n {
                s += self.off2[i] * x[i + 2];
            }
            if i >= 1 {
                s += self.off1[i - 1] * x[i - 1];
            }
            if i >= 2 {
                s += self.off2[i - 2] * x[i - 2];
            }
            y[i] = s;
        }
        y
    }

    /// Number of eigenvalues strictly below `e`, from the signs of the pivots of `A - e I`.
    pub fn count_below(&self, e: f64) -> usize {
        let n = self.len();
        let tiny = f64::MIN_POSITIVE.sqrt();
        let (mut d2, mut d1, mut l_prev) = (1.0, 1.0, 0.0);
        let mut count = 0;
        for i in 0..n {
            let b2 = if i >= 2 { self.off2[i - 2] } else { 0.0 };
            let b1 = if i >= 1 { self.off1[i - 1] } else { 0.0 };
            let l2 = if i >= 2 { b2 / d2 } else { 0.0 };
            let l1 = if i >= 1 { (b1 - l2 * l_prev * d2) / d1 } else { 0.0 };
            let mut d = self.diag[i] - e - l2 * l2 * d2 - l1 * l1 * d1;
            if d.abs() < tiny {
                d = -tiny;
            }
            if d < 0.0 {
                count += 1;
            }
            d2 = d1;
            d1 = d;
            l_prev = l1;
        }
        count
    }

    /// Every eigenvalue in `(lo, hi)`, each located to within `tol` by bisection.
    pub fn eigenvalues_in(&self, lo: f64, hi: f64, tol: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let (c_lo, c_hi) = (self.count_below(lo), self.count_below(hi));
        self.bisect(lo, c_lo, hi, c_hi, tol, &mut out);
        out
    }

    fn bisect(&self, a: f64, ca: usize, b: f64, cb: usize, tol: f64, out: &mut Vec<f64>) {
        if cb <= ca {
            return;
        }
        if b - a <= tol {
            out.extend(std::iter::repeat_n(0.5 * (a + b), cb - ca));
            return;
        }
        let mid = 0.5 * (a + b);
        let cm = self.count_below(mid);
        self.bisect(a, ca, mid, cm, tol, out);
        self.bisect(mid, cm, b, cb, tol, out);
    }

    /// Unit eigenvector for an accurately known eigenvalue, by inverse iteration.
    pub fn eigenvector(&self, lambda: f64) -> Result<Vec<f64>> {
        let n = self.len();
        let lu = BandLu::factor(self, lambda)?;
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.754_877_666).sin()).collect();
        for _ in 0..3 {
            lu.solve(&mut x);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return Err(Error::SolverFailure("inverse iteration broke down".into()));
            }
            x.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(x)
    }

    /// `x^T A x / x^T x`.
    pub fn rayleigh(&self, x: &[f64]) -> f64 {
        let ax = self.matvec(x);
        let num: f64 = ax.iter().zip(x).map(|(a, b)| a * b).sum();
        let den: f64 = x.iter().map(|v| v * v).sum();
        num / den
    }
}

/// LU factors with partial pivoting of `A - shift I`; rows store columns `i-2 ..= i+4`.
struct BandLu {
    n: usize,
    rows: Vec<[f64; 7]>,
    perm: Vec<usize>,
    mult: Vec<[f64; 2]>,
}

const KL: usize = 2;

impl BandLu {
    fn at(rows: &[[f64; 7]], i: usize, j: usize) -> f64 {
        rows[i][j + KL - i]
    }

    fn factor(a: &Pentadiagonal, shift: f64) -> Result<Self> {
        let n = a.len();
        let mut rows = vec![[0.0; 7]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            for j in i.saturating_sub(2)..(i + 3).min(n) {
                row[j + KL - i] = a.get(i, j) - if i == j { shift } else { 0.0 };
            }
        }
        let scale = a.diag.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let mut perm = vec![0; n];
        let mut mult = vec![[0.0; 2]; n];
        for k in 0..n {
            let last = (k + KL).min(n - 1);
            let mut p = k;
            for r in k + 1..=last {
                if Self::at(&rows, r, k).abs() > Self::at(&rows, p, k).abs() {
                    p = r;
                }
            }
            perm[k] = p;
            let right = (k + 4).min(n - 1);
            if p != k {
                for j in k..=right {
                    let (a_k, a_p) = (Self::at(&rows, k, j), Self::at(&rows, p, j));
                    rows[k][j + KL - k] = a_p;
                    rows[p][j + KL - p] = a_k;
                }
            }
            let mut pivot = Self::at(&rows, k, k);
            if pivot.abs() < f64::EPSILON * scale * 1e-6 {
                pivot = f64::EPSILON * scale * 1e-6;
                rows[k][KL] = pivot;
            }
            for r in k + 1..=last {
                let f = Self::at(&rows, r, k) / pivot;
                mult[k][r - k - 1] = f;
                if f != 0.0 {
                    for j in k + 1..=right {
                        let u = Self::at(&rows, k, j);
                        rows[r][j + KL - r] -= f * u;
                    }
                }
                rows[r][k + KL - r] = 0.0;
            }
        }
        Ok(Self { n, rows, perm, mult })
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            b.swap(k, self.perm[k]);
            for r in k + 1..=(k + KL).min(n - 1) {
                b[r] -= self.mult[k][r - k - 1] * b[k];
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + 4).min(n - 1) {
                s -= Self::at(&self.rows, i, j) * b[j];
            }
            b[i] = s / Self::at(&self.rows, i, i);
        }
    }
}
