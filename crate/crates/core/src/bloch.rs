//! Bloch Hamiltonian of `D_x^2 + p` on `L^2_xi` in the plane-wave basis
//! `exp(i (xi + 2 pi k) x)`, `|k| <= K`.
//!
//! Coefficient vectors are stored with index `k + K`.

use crate::error::{Error, Result};
use crate::potential::{SymmetryKind, TrigPolynomial};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};

/// Bands at the top of the truncated basis that are never reported.
pub const DISCARDED_BANDS: usize = 4;

static EIGENSOLVES: AtomicUsize = AtomicUsize::new(0);

/// Number of dense Hermitian eigensolves performed by this process.
pub fn eigensolve_count() -> usize {
    EIGENSOLVES.load(Ordering::Relaxed)
}

pub(crate) fn count_eigensolve() {
    EIGENSOLVES.fetch_add(1, Ordering::Relaxed);
}

/// Cutoff used when the caller does not choose one.
pub fn default_cutoff(bandwidth: usize, band_count: usize) -> usize {
    bandwidth + 16 + band_count
}

#[derive(Debug, Clone)]
pub struct BlochOperator {
    pub potential: TrigPolynomial,
    pub xi: f64,
    pub cutoff: usize,
    matrix: DMatrix<Complex64>,
}

impl BlochOperator {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        2 * self.cutoff + 1
    }

    /// `(H - E) psi` in coefficient space.
    pub fn apply_shifted(&self, psi: &DVector<Complex64>, energy: f64) -> DVector<Complex64> {
        &self.matrix * psi - psi * Complex64::new(energy, 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct BlochSpectrum {
    pub xi: f64,
    pub cutoff: usize,
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors, ordered like `eigenvalues`.
    pub eigenvectors: DMatrix<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParitySpectra {
    pub mu_e: Vec<f64>,
    pub mu_o: Vec<f64>,
}

/// Plane-wave index `k` belonging to storage slot `i`.
pub fn index_to_k(i: usize, cutoff: usize) -> i64 {
    i as i64 - cutoff as i64
}

pub fn assemble_bloch(p: &TrigPolynomial, xi: f64, cutoff: usize) -> Result<BlochOperator> {
    let bandwidth = p.bandwidth();
    if cutoff < bandwidth || cutoff == 0 {
        return Err(Error::CutoffTooSmall { cutoff, bandwidth });
    }
    let dim = 2 * cutoff + 1;
    let mut m = DMatrix::from_element(dim, dim, Complex64::default());
    for j in 0..dim {
        let kj = index_to_k(j, cutoff) as f64;
        let q = xi + 2.0 * PI * kj;
        m[(j, j)] = Complex64::new(q * q, 0.0);
    }
    for (l, c) in p.terms() {
        for j in 0..dim {
            let k = j as i64 - l;
            if k >= 0 && (k as usize) < dim {
                m[(j, k as usize)] += c;
            }
        }
    }
    Ok(BlochOperator { potential: p.clone(), xi, cutoff, matrix: m })
}

/// Ascending eigenpairs of a Hermitian matrix.
///
/// The returned vectors are trusted and each eigenvalue is recomputed as the Rayleigh
/// quotient of its vector: the QR iteration can attach a vector to the wrong member of
/// a nearly degenerate pair, and sorting the quotients restores the pairing.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    count_eigensolve();
    let n = m.nrows();
    let eig = nalgebra::linalg::SymmetricEigen::try_new(m.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::SolverFailure(format!("no convergence for {n}x{n} matrix")))?;
    let mv = m * &eig.eigenvectors;
    let quotients: Vec<f64> = (0..n).map(|i| eig.eigenvectors.column(i).dotc(&mv.column(i)).re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| quotients[a].total_cmp(&quotients[b]));
    let values = order.iter().map(|&i| quotients[i]).collect();
    let mut vectors = DMatrix::from_element(n, n, Complex64::default());
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

pub fn spectrum(op: &BlochOperator, count: usize) -> Result<BlochSpectrum> {
    let available = op.dim().saturating_sub(DISCARDED_BANDS);
    if count > available {
        return Err(Error::BandCountTooLarge { requested: count, available });
    }
    let (values, vectors) = hermitian_eigen(op.matrix())?;
    Ok(BlochSpectrum {
        xi: op.xi,
        cutoff: op.cutoff,
        eigenvalues: values[..count].to_vec(),
        eigenvectors: vectors.columns(0, count).into_owned(),
    })
}

/// Lowest `count` eigenvalues of `D_x^2 + p` on `L^2_xi` with the default cutoff.
pub fn bands(p: &TrigPolynomial, xi: f64, count: usize) -> Result<Vec<f64>> {
    let op = assemble_bloch(p, xi, default_cutoff(p.bandwidth(), count))?;
    Ok(spectrum(&op, count)?.eigenvalues)
}

/// One parity block: eigenvalues and eigenvectors embedded in the full index range.
#[derive(Debug, Clone)]
pub struct ParityBlock {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<DVector<Complex64>>,
}

/// Even (`parity = 0`) or odd (`parity = 1`) Fourier-index block.
pub fn parity_block(p: &TrigPolynomial, xi: f64, cutoff: usize, parity: i64) -> Result<ParityBlock> {
    let sym = p.check_symmetry(SymmetryKind::HalfPeriodEven);
    if !sym.holds {
        return Err(Error::SymmetryViolated(format!(
            "parity blocks need a half-period even potential (odd coefficient {:e})",
            sym.max_violation
        )));
    }
    let op = assemble_bloch(p, xi, cutoff)?;
    let idx: Vec<usize> = (0..op.dim())
        .filter(|&i| index_to_k(i, cutoff).rem_euclid(2) == parity)
        .collect();
    let block = DMatrix::from_fn(idx.len(), idx.len(), |a, b| op.matrix()[(idx[a], idx[b])]);
    let (values, vectors) = hermitian_eigen(&block)?;
    let keep = idx.len().saturating_sub(DISCARDED_BANDS / 2);
    let eigenvectors = (0..keep)
        .map(|c| {
            let mut v = DVector::from_element(op.dim(), Complex64::default());
            for (a, &i) in idx.iter().enumerate() {
                v[i] = vectors[(a, c)];
            }
            v
        })
        .collect();
    Ok(ParityBlock { eigenvalues: values[..keep].to_vec(), eigenvectors })
}

pub fn parity_spectra(p: &TrigPolynomial, xi: f64, cutoff: usize) -> Result<ParitySpectra> {
    let e = parity_block(p, xi, cutoff, 0)?;
    let o = parity_block(p, xi, cutoff, 1)?;
    Ok(ParitySpectra { mu_e: e.eigenvalues, mu_o: o.eigenvalues })
}

/// Sampled dispersion curves `E_j(xi_i)`.
#[derive(Debug, Clone)]
pub struct DispersionSheet {
    pub xi: Vec<f64>,
    /// `energies[i][j]` is band `j + 1` at `xi[i]`.
    pub energies: Vec<Vec<f64>>,
    /// `(band, grid index)` pairs where monotonicity on `[0, pi]` / `[pi, 2 pi]` fails.
    pub monotonicity_violations: Vec<(usize, usize)>,
}

impl DispersionSheet {
    pub fn band(&self, j: usize) -> Vec<f64> {
        self.energies.iter().map(|row| row[j]).collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let bands = self.energies.first().map_or(0, Vec::len);
        let header: Vec<String> =
            std::iter::once("xi".to_string()).chain((1..=bands).map(|j| format!("band_{j}"))).collect();
        w.write_record(&header).map_err(csv_err)?;
        for (xi, row) in self.xi.iter().zip(&self.energies) {
            let record: Vec<String> = std::iter::once(fmt(*xi)).chain(row.iter().map(|e| fmt(*e))).collect();
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Band `j` is expected to increase on `[0, pi]` when `j` is odd and to
/// decrease when `j` is even, mirrored on `[pi, 2 pi]`.
pub fn dispersion_sheet(p: &TrigPolynomial, xi_grid: &[f64], band_count: usize) -> Result<DispersionSheet> {
    if xi_grid.iter().any(|&x| !(0.0..=2.0 * PI).contains(&x)) {
        return Err(Error::ParameterViolation("xi grid must lie in [0, 2 pi]".into()));
    }
    let energies: Vec<Vec<f64>> = xi_grid
        .iter()
        .map(|&xi| bands(p, xi, band_count))
        .collect::<Result<_>>()?;
    let mut violations = Vec::new();
    for j in 0..band_count {
        let increasing_left = j % 2 == 0;
        for i in 1..xi_grid.len() {
            let (a, b) = (xi_grid[i - 1], xi_grid[i]);
            let de = energies[i][j] - energies[i - 1][j];
            let left = b <= PI + 1e-12;
            let right = a >= PI - 1e-12;
            let expect_up = if left {
                increasing_left
            } else if right {
                !increasing_left
            } else {
                continue;
            };
            let ok = if expect_up { de > -1e-10 } else { de < 1e-10 };
            if !ok {
                violations.push((j + 1, i));
            }
        }
    }
    Ok(DispersionSheet { xi: xi_grid.to_vec(), energies, monotonicity_violations: violations })
}

/// Residual bound of a trial vector together with the enclosure it certifies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasimodeCertificate {
    pub eta: f64,
    pub nearest_distance: f64,
    pub holds: bool,
}

pub fn quasimode_certificate(op: &BlochOperator, psi: &DVector<Complex64>, energy: f64) -> Result<QuasimodeCertificate> {
    let norm = psi.norm();
    if norm == 0.0 {
        return Err(Error::ParameterViolation("quasimode must be nonzero".into()));
    }
    let eta = op.apply_shifted(psi, energy).norm() / norm;
    let (values, _) = hermitian_eigen(op.matrix())?;
    let nearest = values.iter().map(|l| (l - energy).abs()).fold(f64::INFINITY, f64::min);
    let slack = 1e-12 * (1.0 + energy.abs());
    Ok(QuasimodeCertificate { eta, nearest_distance: nearest, holds: nearest <= eta + slack })
}
