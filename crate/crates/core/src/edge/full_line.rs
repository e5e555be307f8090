//! Full-line eigenvalues by Floquet matching.
//!
//! At energy `E` in the common gap of both bulks, the solution decaying at `-inf`
//! starts on the expanding eigenvector of the left monodromy and the solution
//! decaying at `+inf` on the contracting eigenvector of the right one. Each is
//! carried to `x = 0`. Eigenvalues are the energies where the two phase-plane
//! directions coincide, i.e. where their angle difference is a multiple of `pi`.

use super::{LinePotential, Side};
use crate::error::{Error, Result};
use crate::ode::{self, Tolerance};
use crate::roots;
use std::f64::consts::PI;

/// Multipliers closer than this to the unit circle are treated as band energies.
pub const UNIT_CIRCLE_TOL: f64 = 1e-8;

const MONODROMY_TOL: Tolerance = Tolerance { rtol: 1e-12, atol: 1e-14, h_max: 0.05 };
const JUNCTION_TOL: Tolerance = Tolerance { rtol: 1e-11, atol: 1e-14, h_max: 0.05 };
const INITIAL_SCAN: usize = 48;
const MAX_SCAN_DEPTH: usize = 10;
const ROOT_TOL: f64 = 1e-13;

pub type Matrix2 = [[f64; 2]; 2];

/// Transfer matrix of `-u'' + (q - E) u = 0` over `[x0, x0 + 1]`.
pub fn monodromy(q: impl Fn(f64) -> f64, x0: f64, energy: f64) -> Result<Matrix2> {
    let y = ode::integrate(
        |x, y: &[f64; 4]| {
            let g = q(x) - energy;
            [y[1], g * y[0], y[3], g * y[2]]
        },
        x0,
        [1.0, 0.0, 0.0, 1.0],
        x0 + 1.0,
        MONODROMY_TOL,
    )?;
    Ok([[y[0], y[2]], [y[1], y[3]]])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetSolution {
    pub multiplier: f64,
    /// Unit vector `(u, u')`.
    pub direction: [f64; 2],
}

/// The eigenpair of `m` with `|mu| > 1` (`expanding`) or `|mu| < 1`.
///
/// Works with `N = M - mu0 I`, `mu0 = sign(tr M)`, whose entries are small near a
/// band edge, so the multipliers are not computed from `tr M` directly.
pub fn floquet_solution(m: &Matrix2, energy: f64, expanding: bool) -> Result<FloquetSolution> {
    let mu0 = (m[0][0] + m[1][1]).signum();
    let n = [[m[0][0] - mu0, m[0][1]], [m[1][0], m[1][1] - mu0]];
    let tr = n[0][0] + n[1][1];
    let det = n[0][0] * n[1][1] - n[0][1] * n[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc <= 0.0 {
        return Err(Error::InGapViolation { energy, modulus: 1.0 });
    }
    let root = disc.sqrt();
    let big = 0.5 * (tr + root.copysign(tr));
    let small = if big != 0.0 { det / big } else { 0.0 };
    let candidates = [big, small];
    let chosen = candidates
        .iter()
        .copied()
        .find(|&nu| ((mu0 + nu).abs() > 1.0) == expanding)
        .ok_or(Error::InGapViolation { energy, modulus: 1.0 })?;
    let mu = mu0 + chosen;
    if (mu.abs() - 1.0).abs() < UNIT_CIRCLE_TOL {
        return Err(Error::InGapViolation { energy, modulus: mu.abs() });
    }
    let a = [n[0][1], chosen - n[0][0]];
    let b = [chosen - n[1][1], n[1][0]];
    let na = a[0].hypot(a[1]);
    let nb = b[0].hypot(b[1]);
    let (v, norm) = if na >= nb { (a, na) } else { (b, nb) };
    if norm == 0.0 {
        return Err(Error::SolverFailure("degenerate Floquet eigenvector".into()));
    }
    Ok(FloquetSolution { multiplier: mu, direction: [v[0] / norm, v[1] / norm] })
}

/// Value of the matching condition at one energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchingValue {
    pub energy: f64,
    /// `det[u_L(0), u_R(0)]` for unit vectors.
    pub determinant: f64,
    /// Angle from `u_R(0)` to `u_L(0)` reduced to `[0, pi)`.
    pub angle: f64,
    pub left_multiplier: f64,
    pub right_multiplier: f64,
}

fn propagate(pot: &LinePotential, side: Side, from: f64, y0: [f64; 2], energy: f64) -> Result<[f64; 2]> {
    let y = ode::integrate(
        |x, y: &[f64; 2]| [y[1], (pot.eval_side(x, side) - energy) * y[0]],
        from,
        y0,
        0.0,
        JUNCTION_TOL,
    )?;
    let norm = y[0].hypot(y[1]);
    Ok([y[0] / norm, y[1] / norm])
}

/// Matching condition at `energy` with the junction window `[-half_length, half_length]`.
pub fn matching(pot: &LinePotential, half_length: f64, energy: f64) -> Result<MatchingValue> {
    let x_left = -half_length;
    let x_right = half_length;
    let left = floquet_solution(&monodromy(|x| pot.left_bulk(x), x_left, energy)?, energy, true)?;
    let right = floquet_solution(&monodromy(|x| pot.right_bulk(x), x_right, energy)?, energy, false)?;
    let ul = propagate(pot, Side::Left, x_left, left.direction, energy)?;
    let ur = propagate(pot, Side::Right, x_right, right.direction, energy)?;
    let determinant = ur[0] * ul[1] - ur[1] * ul[0];
    let angle = (ul[1].atan2(ul[0]) - ur[1].atan2(ur[0])).rem_euclid(PI);
    Ok(MatchingValue {
        energy,
        determinant,
        angle,
        left_multiplier: left.multiplier,
        right_multiplier: right.multiplier,
    })
}

/// Representative of `angle` modulo `pi` closest to `previous`.
fn unwrap_near(angle: f64, previous: f64) -> f64 {
    angle + PI * ((previous - angle) / PI).round()
}

/// Signed angle in `(-pi/2, pi/2]` equal to `angle` modulo `pi`.
fn centered(angle: f64) -> f64 {
    let a = angle.rem_euclid(PI);
    if a > 0.5 * PI {
        a - PI
    } else {
        a
    }
}

/// All eigenvalues in `(lo, hi)`.
pub fn roots_in(pot: &LinePotential, half_length: f64, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(hi > lo) {
        return Ok(Vec::new());
    }
    let eval = |e: f64| matching(pot, half_length, e).map(|m| m.angle);
    let raw: Vec<(f64, f64)> = (0..=INITIAL_SCAN)
        .map(|k| {
            let e = lo + (hi - lo) * k as f64 / INITIAL_SCAN as f64;
            eval(e).map(|a| (e, a))
        })
        .collect::<Result<_>>()?;
    // walk the scan, subdividing until consecutive unwrapped angles differ by less than pi / 4
    let mut refined: Vec<(f64, f64)> = vec![raw[0]];
    let mut stack: Vec<((f64, f64), usize)> = raw[1..].iter().rev().map(|&p| (p, 0)).collect();
    while let Some(((e, a), depth)) = stack.pop() {
        let &(e_prev, u_prev) = refined.last().unwrap();
        let u = unwrap_near(a, u_prev);
        if (u - u_prev).abs() < 0.25 * PI || depth >= MAX_SCAN_DEPTH {
            refined.push((e, u));
            continue;
        }
        let em = 0.5 * (e_prev + e);
        stack.push(((e, a), depth + 1));
        stack.push(((em, eval(em)?), depth + 1));
    }
    let mut roots = Vec::new();
    for w in refined.windows(2) {
        let (a, b) = (w[0], w[1]);
        let ka = (a.1 / PI).floor();
        let kb = (b.1 / PI).floor();
        if ka == kb {
            continue;
        }
        let g = |e: f64| eval(e).map(centered);
        roots.push(roots::brent(g, a.0, b.0, ROOT_TOL)?);
    }
    Ok(roots)
}
