//! Eigenbundles of `P_s(xi, t) = D_x^2 + V + s W_t` over the `(xi, t)` torus.
//!
//! Every fiber is represented in the fixed basis `exp(2 pi i k x)` through the
//! conjugated symbol `(xi + 2 pi k)^2`. Going once around in `xi` shifts the
//! index by one, so the frame at `xi = 2 pi` is the frame at `xi = 0` with
//! coefficients `d_k = c_{k+1}`; this is the gluing used on the seam.

use crate::bloch::{self, hermitian_eigen};
use crate::error::{Error, Result};
use crate::potential::TrigPolynomial;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Smallest admissible gap in the (H1) scan.
pub const H1_TOL: f64 = 1e-7;
/// Gap below which a torus node is rejected.
pub const GAP_FLOOR: f64 = 1e-9;
const SATURATION_MARGIN: f64 = 0.1;
const MAX_GRID: usize = 1024;
const REFINE_FLUX: f64 = PI / 3.0;
const REFINE_LINK: f64 = 0.9;
const REFINE_VORTEX: f64 = 1e-3;

/// `V + s W_t`.
pub fn family_potential(v: &TrigPolynomial, w: &TrigPolynomial, s: f64, t: f64) -> TrigPolynomial {
    v.add(&w.translate(t).scale(s))
}

pub fn torus_cutoff(v: &TrigPolynomial, w: &TrigPolynomial, n: usize) -> usize {
    bloch::default_cutoff(v.bandwidth().max(w.bandwidth()), n + 1 + bloch::DISCARDED_BANDS)
}

/// `(lambda_n, lambda_{n+1})` of `D_x^2 + V + s W_t` on `L^2_pi`.
pub fn gap_edges(v: &TrigPolynomial, w: &TrigPolynomial, n: usize, s: f64, t: f64, cutoff: usize) -> Result<(f64, f64)> {
    let op = bloch::assemble_bloch(&family_potential(v, w, s, t), PI, cutoff)?;
    let ev = bloch::spectrum(&op, n + 1)?.eigenvalues;
    Ok((ev[n - 1], ev[n]))
}

#[derive(Debug, Clone)]
pub struct GapSelection {
    /// The `t` samples at `s = 1`.
    pub t_grid: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Midpoint of the `xi = pi` gap at `s = 1`.
    pub e_ref: Vec<f64>,
    pub min_gap: f64,
    pub argmin: (f64, f64),
}

pub fn gap_scan_h1(
    v: &TrigPolynomial,
    w: &TrigPolynomial,
    n: usize,
    s_grid: &[f64],
    t_grid: &[f64],
    cutoff: usize,
) -> Result<GapSelection> {
    if s_grid.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
        return Err(Error::ParameterViolation("s grid must lie in (0, 1]".into()));
    }
    let nodes: Vec<(f64, f64)> =
        s_grid.iter().flat_map(|&s| t_grid.iter().map(move |&t| (s, t))).collect();
    let gaps: Vec<(f64, f64, f64)> = nodes
        .par_iter()
        .map(|&(s, t)| gap_edges(v, w, n, s, t, cutoff).map(|(a, b)| (s, t, b - a)))
        .collect::<Result<_>>()?;
    let (mut min_gap, mut argmin) = (f64::INFINITY, (0.0, 0.0));
    for &(s, t, g) in &gaps {
        if g < min_gap {
            min_gap = g;
            argmin = (s, t);
        }
    }
    if min_gap <= H1_TOL {
        return Err(Error::H1Violated { gap: min_gap, s: argmin.0, t: argmin.1 });
    }
    let edges: Vec<(f64, f64)> = t_grid
        .par_iter()
        .map(|&t| gap_edges(v, w, n, 1.0, t, cutoff))
        .collect::<Result<_>>()?;
    for (&t, &(a, b)) in t_grid.iter().zip(&edges) {
        if b - a <= H1_TOL {
            return Err(Error::H1Violated { gap: b - a, s: 1.0, t });
        }
    }
    Ok(GapSelection {
        t_grid: t_grid.to_vec(),
        lower: edges.iter().map(|e| e.0).collect(),
        upper: edges.iter().map(|e| e.1).collect(),
        e_ref: edges.iter().map(|e| 0.5 * (e.0 + e.1)).collect(),
        min_gap,
        argmin,
    })
}

pub fn uniform_grid(count: usize) -> Vec<f64> {
    (0..count).map(|i| 2.0 * PI * i as f64 / count as f64).collect()
}

#[derive(Debug, Clone)]
pub struct TorusField {
    pub xi_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub s: f64,
    pub n: usize,
    pub cutoff: usize,
    pub min_gap: f64,
    pub v: TrigPolynomial,
    pub w: TrigPolynomial,
    /// Frame at node `(i, j)` stored at `i * t_grid.len() + j`.
    pub frames: Vec<DMatrix<Complex64>>,
}

/// Frame of the neighbouring fundamental domain in `xi`: shift by `sign` index slots.
fn shift_frame(f: &DMatrix<Complex64>, shift: i64) -> DMatrix<Complex64> {
    let dim = f.nrows() as i64;
    DMatrix::from_fn(f.nrows(), f.ncols(), |r, c| {
        let src = r as i64 + shift;
        if (0..dim).contains(&src) {
            f[(src as usize, c)]
        } else {
            Complex64::default()
        }
    })
}

impl TorusField {
    pub fn n_xi(&self) -> usize {
        self.xi_grid.len()
    }

    pub fn n_t(&self) -> usize {
        self.t_grid.len()
    }

    pub fn frame(&self, i: usize, j: usize) -> &DMatrix<Complex64> {
        &self.frames[i * self.n_t() + j]
    }

    /// Frame at any lattice node, unwrapping the torus with the seam gluing.
    pub fn frame_at(&self, i: i64, j: i64) -> DMatrix<Complex64> {
        let nx = self.n_xi() as i64;
        let wraps = i.div_euclid(nx);
        let f = self.frame(i.rem_euclid(nx) as usize, j.rem_euclid(self.n_t() as i64) as usize);
        if wraps == 0 {
            f.clone()
        } else {
            shift_frame(f, wraps)
        }
    }

    /// Replace every frame by `F U` with `U` produced per node.
    pub fn regauge(&self, mut unitary: impl FnMut(usize, usize) -> DMatrix<Complex64>) -> Self {
        let mut out = self.clone();
        for i in 0..self.n_xi() {
            for j in 0..self.n_t() {
                let idx = i * self.n_t() + j;
                out.frames[idx] = &self.frames[idx] * unitary(i, j);
            }
        }
        out
    }

    /// Complex conjugate of every frame.
    pub fn conjugate(&self) -> Self {
        let mut out = self.clone();
        for f in &mut out.frames {
            *f = f.map(|z| z.conj());
        }
        out
    }

}

pub fn torus_eigenframe(
    v: &TrigPolynomial,
    w: &TrigPolynomial,
    s: f64,
    n: usize,
    n_xi: usize,
    n_t: usize,
    cutoff: usize,
) -> Result<TorusField> {
    torus_eigenframe_on(v, w, s, n, uniform_grid(n_xi), uniform_grid(n_t), cutoff, &mut NodeCache::new())
}

type NodeCache = HashMap<(u64, u64), (DMatrix<Complex64>, f64)>;

/// Frames on arbitrary increasing grids in `[0, 2 pi)`, reusing already solved nodes.
#[allow(clippy::too_many_arguments)]
fn torus_eigenframe_on(
    v: &TrigPolynomial,
    w: &TrigPolynomial,
    s: f64,
    n: usize,
    xi_grid: Vec<f64>,
    t_grid: Vec<f64>,
    cutoff: usize,
    cache: &mut NodeCache,
) -> Result<TorusField> {
    let key = |xi: f64, t: f64| (xi.to_bits(), t.to_bits());
    let nodes: Vec<(f64, f64)> =
        xi_grid.iter().flat_map(|&x| t_grid.iter().map(move |&t| (x, t))).collect();
    let missing: Vec<(f64, f64)> = nodes.iter().copied().filter(|&(x, t)| !cache.contains_key(&key(x, t))).collect();
    let solved: Vec<(DMatrix<Complex64>, f64)> = missing
        .par_iter()
        .map(|&(xi, t)| {
            let op = bloch::assemble_bloch(&family_potential(v, w, s, t), xi, cutoff)?;
            let (values, vectors) = hermitian_eigen(op.matrix())?;
            let gap = values[n] - values[n - 1];
            if gap <= GAP_FLOOR {
                return Err(Error::GapClosedAtNode { xi, t, gap });
            }
            Ok((vectors.columns(0, n).into_owned(), gap))
        })
        .collect::<Result<_>>()?;
    for (&(x, t), entry) in missing.iter().zip(solved) {
        cache.insert(key(x, t), entry);
    }
    let entries: Vec<&(DMatrix<Complex64>, f64)> = nodes.iter().map(|&(x, t)| &cache[&key(x, t)]).collect();
    let min_gap = entries.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    Ok(TorusField {
        xi_grid,
        t_grid,
        s,
        n,
        cutoff,
        min_gap,
        v: v.clone(),
        w: w.clone(),
        frames: entries.into_iter().map(|e| e.0.clone()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChernReport {
    pub c1: i64,
    pub raw: f64,
    pub max_flux: f64,
    pub min_link: f64,
    pub n_xi: usize,
    pub n_t: usize,
    pub s: f64,
}

fn link(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    (a.adjoint() * b).determinant()
}

/// Link variables and plaquette fluxes, indexed like the frames.
struct Lattice {
    u_xi: Vec<Complex64>,
    u_t: Vec<Complex64>,
    flux: Vec<f64>,
    min_link: f64,
}

fn lattice(field: &TorusField) -> Lattice {
    let (nx, nt) = (field.n_xi() as i64, field.n_t() as i64);
    let mut u_xi = vec![Complex64::default(); (nx * nt) as usize];
    let mut u_t = vec![Complex64::default(); (nx * nt) as usize];
    let mut min_link = f64::INFINITY;
    for i in 0..nx {
        for j in 0..nt {
            let here = field.frame_at(i, j);
            let a = link(&here, &field.frame_at(i + 1, j));
            let b = link(&here, &field.frame_at(i, j + 1));
            min_link = min_link.min(a.norm()).min(b.norm());
            u_xi[(i * nt + j) as usize] = a;
            u_t[(i * nt + j) as usize] = b;
        }
    }
    let at = |i: i64, j: i64| ((i.rem_euclid(nx)) * nt + j.rem_euclid(nt)) as usize;
    let mut flux = vec![0.0; (nx * nt) as usize];
    for i in 0..nx {
        for j in 0..nt {
            let w = u_xi[at(i, j)] * u_t[at(i + 1, j)] * u_xi[at(i, j + 1)].conj() * u_t[at(i, j)].conj();
            flux[at(i, j)] = w.arg();
        }
    }
    Lattice { u_xi, u_t, flux, min_link }
}

/// Lattice field-strength sum with plaquettes oriented `xi` then `t`.
pub fn chern_fhs(field: &TorusField) -> Result<ChernReport> {
    let lat = lattice(field);
    if lat.min_link < 1e-8 {
        return Err(Error::VortexOnLink { modulus: lat.min_link });
    }
    let total: f64 = lat.flux.iter().sum();
    let max_flux = lat.flux.iter().fold(0.0f64, |m, f| m.max(f.abs()));
    if max_flux >= PI - SATURATION_MARGIN {
        return Err(Error::PlaquetteSaturated { flux: max_flux });
    }
    let raw = total / (2.0 * PI);
    let c1 = raw.round();
    if (raw - c1).abs() > 1e-6 {
        return Err(Error::NotQuantized { raw });
    }
    Ok(ChernReport {
        c1: c1 as i64,
        raw,
        max_flux,
        min_link: lat.min_link,
        n_xi: field.n_xi(),
        n_t: field.n_t(),
        s: field.s,
    })
}

/// Inserts the midpoint of every flagged interval; the last interval ends at `2 pi`.
fn refine(grid: &[f64], flagged: &[bool]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * grid.len());
    for (k, &g) in grid.iter().enumerate() {
        out.push(g);
        if flagged[k] {
            let next = grid.get(k + 1).copied().unwrap_or(2.0 * PI);
            out.push(0.5 * (g + next));
        }
    }
    out
}

/// Chern number on a grid refined from `grid x grid` until every plaquette is resolved.
///
/// An interval is bisected when a plaquette over it carries flux above `pi / 3`, or, in
/// `t`, when a link has modulus below 0.9. Curvature concentrated near a nearly closed
/// gap then gets nodes where it lives instead of aliasing on a uniform grid.
pub fn chern_number(
    v: &TrigPolynomial,
    w: &TrigPolynomial,
    n: usize,
    s: f64,
    grid: usize,
    cutoff: usize,
) -> Result<ChernReport> {
    let mut cache = NodeCache::new();
    let (mut xi_grid, mut t_grid) = (uniform_grid(grid), uniform_grid(grid));
    loop {
        let field = torus_eigenframe_on(v, w, s, n, xi_grid.clone(), t_grid.clone(), cutoff, &mut cache)?;
        let lat = lattice(&field);
        let nt = field.n_t();
        let mut bad_xi = vec![false; field.n_xi()];
        let mut bad_t = vec![false; nt];
        for (idx, &f) in lat.flux.iter().enumerate() {
            let (i, j) = (idx / nt, idx % nt);
            if f.abs() > REFINE_FLUX {
                bad_xi[i] = true;
                bad_t[j] = true;
            }
            if lat.u_t[idx].norm() < REFINE_LINK {
                bad_t[j] = true;
            }
            if lat.u_xi[idx].norm() < REFINE_VORTEX {
                bad_xi[i] = true;
            }
        }
        if !bad_xi.contains(&true) && !bad_t.contains(&true) {
            return chern_fhs(&field);
        }
        xi_grid = refine(&xi_grid, &bad_xi);
        t_grid = refine(&t_grid, &bad_t);
        if xi_grid.len() > MAX_GRID || t_grid.len() > MAX_GRID {
            let flux = lat.flux.iter().fold(0.0f64, |m, f| m.max(f.abs()));
            return Err(Error::PlaquetteSaturated { flux });
        }
    }
}

/// Step of the central differences used for the curvature trace.
pub const CURVATURE_STEP: f64 = 1e-4;

fn projector_at(field: &TorusField, xi: f64, t: f64) -> Result<DMatrix<Complex64>> {
    let op = bloch::assemble_bloch(&family_potential(&field.v, &field.w, field.s, t), xi, field.cutoff)?;
    let (_, vectors) = hermitian_eigen(op.matrix())?;
    let f = vectors.columns(0, field.n).into_owned();
    Ok(&f * f.adjoint())
}

/// `Tr(Pi [d_xi Pi, d_t Pi])` at node `(i, j)`, derivatives by central differences.
pub fn berry_curvature_trace(field: &TorusField, i: usize, j: usize) -> Result<Complex64> {
    let (xi, t, h) = (field.xi_grid[i], field.t_grid[j], CURVATURE_STEP);
    let f = field.frame(i, j);
    let p = f * f.adjoint();
    let scale = Complex64::new(2.0 * h, 0.0);
    let px = (projector_at(field, xi + h, t)? - projector_at(field, xi - h, t)?) / scale;
    let pt = (projector_at(field, xi, t + h)? - projector_at(field, xi, t - h)?) / scale;
    Ok((&p * (&px * &pt - &pt * &px)).trace())
}

/// `(1 / 2 pi i) sum B dxi dt` over the whole grid.
pub fn curvature_riemann_sum(field: &TorusField) -> Result<f64> {
    let cell = (2.0 * PI / field.n_xi() as f64) * (2.0 * PI / field.n_t() as f64);
    let nodes: Vec<(usize, usize)> =
        (0..field.n_xi()).flat_map(|i| (0..field.n_t()).map(move |j| (i, j))).collect();
    let values: Vec<Complex64> = nodes
        .par_iter()
        .map(|&(i, j)| berry_curvature_trace(field, i, j))
        .collect::<Result<_>>()?;
    let acc: Complex64 = values.iter().sum();
    Ok((acc * cell / Complex64::new(0.0, 2.0 * PI)).re)
}

/// Chern numbers for several dislocation strengths.
pub fn chern_s_independence(
    v: &TrigPolynomial,
    w: &TrigPolynomial,
    n: usize,
    s_list: &[f64],
    grid: usize,
    cutoff: usize,
) -> Result<Vec<ChernReport>> {
    s_list.iter().map(|&s| chern_number(v, w, n, s, grid, cutoff)).collect()
}
