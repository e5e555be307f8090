//! In-gap spectra of the dislocated family
//! `P_delta(t) = -d^2/dx^2 + V + delta chi_-(delta x) W + delta chi_+(delta x) W_t + F`
//! and their spectral flow through a reference energy. `delta = 1` is the unscaled
//! dislocation.
//!
//! Two backends are provided. The truncated one discretizes `[-L, L]` with
//! Dirichlet walls (fourth-order finite differences or a sine basis) and keeps only
//! states localized near the junction. The full-line one matches Floquet solutions
//! decaying at both ends and has no walls.

pub mod banded;
pub mod full_line;
pub mod sine;

use crate::bulk;
use crate::coupling::{self, CouplingSeries};
use crate::dirac::{self, DiracData};
use crate::dirac_line::{self, DiracLineFamily, TransitionProfile};
use crate::error::{Error, Result};
use crate::flow::{self, FlowSample, FlowTrace, TrackingOptions};
use crate::potential::{TrigEvaluator, TrigPolynomial};
use banded::Pentadiagonal;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Domains beyond this half-length are not attempted by the truncated backend.
pub const MAX_TRUNCATED_HALF_LENGTH: f64 = 3000.0;
/// Required half-length in units of the decay length for the truncated backend.
pub const DECAY_LENGTHS: f64 = 20.0;
/// Junction half-window of the full-line backend in units of the profile width.
pub const PROFILE_WIDTHS: f64 = 12.0;
/// Fraction of the essential gap trimmed from each end of the search window.
pub const WINDOW_MARGIN: f64 = 0.02;
pub const DEFAULT_STEP: f64 = 0.01;
const EIGEN_TOL: f64 = 1e-11;

/// Compactly supported `F(x) = height cos^2(pi x / (2 a))` on `|x| < a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub height: f64,
    pub half_width: f64,
}

impl Bump {
    pub fn eval(&self, x: f64) -> f64 {
        if x.abs() < self.half_width {
            self.height * (0.5 * PI * x / self.half_width).cos().powi(2)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Discretization {
    FiniteDifference { step: f64 },
    SineSpectral { modes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    Truncated,
    FullLine,
}

/// Which one-sided limit of a step profile to use at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Left,
    Right,
    Both,
}

/// Pointwise potential of `P_delta(t)`.
#[derive(Debug, Clone)]
pub struct LinePotential {
    v: TrigEvaluator,
    w: TrigEvaluator,
    wt: TrigEvaluator,
    profile: TransitionProfile,
    delta: f64,
    bump: Option<Bump>,
}

impl LinePotential {
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_side(x, Side::Both)
    }

    pub(crate) fn eval_side(&self, x: f64, side: Side) -> f64 {
        let cp = match (self.profile, side) {
            (TransitionProfile::Step, Side::Left) => 0.0,
            (TransitionProfile::Step, Side::Right) => 1.0,
            (p, _) => p.chi_plus(self.delta * x),
        };
        let f = self.bump.map_or(0.0, |b| b.eval(x));
        self.v.eval(x) + self.delta * ((1.0 - cp) * self.w.eval(x) + cp * self.wt.eval(x)) + f
    }

    pub fn left_bulk(&self, x: f64) -> f64 {
        self.v.eval(x) + self.delta * self.w.eval(x)
    }

    pub fn right_bulk(&self, x: f64) -> f64 {
        self.v.eval(x) + self.delta * self.wt.eval(x)
    }
}

#[derive(Debug, Clone)]
pub struct EdgeProblem {
    pub v: TrigPolynomial,
    pub w: TrigPolynomial,
    pub n: usize,
    pub profile: TransitionProfile,
    pub delta: f64,
    pub bump: Option<Bump>,
    pub half_length: f64,
    pub discretization: Discretization,
    pub backend: Backend,
    pub cutoff: usize,
    pub dirac: DiracData,
    pub theta: CouplingSeries,
    pub min_modulus: f64,
}

fn profile_width(p: &TransitionProfile) -> f64 {
    match *p {
        TransitionProfile::Step => 0.0,
        TransitionProfile::Tanh { width } => width,
    }
}

impl EdgeProblem {
    /// Problem with automatically chosen backend and domain.
    pub fn new(v: &TrigPolynomial, w: &TrigPolynomial, n: usize, profile: TransitionProfile, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::ParameterViolation(format!("delta {delta} must be positive")));
        }
        let data = dirac::find_dirac_point_default(v, n)?;
        let theta = coupling::theta_series(&data, w)?;
        let min_modulus = (0..512).map(|i| theta.eval(2.0 * PI * i as f64 / 512.0).norm()).fold(f64::INFINITY, f64::min);
        if min_modulus <= coupling::H2_TOL {
            return Err(Error::H2Violated { min_modulus, t: f64::NAN });
        }
        let mut p = Self {
            v: v.clone(),
            w: w.clone(),
            n,
            profile,
            delta,
            bump: None,
            half_length: 0.0,
            discretization: Discretization::FiniteDifference { step: DEFAULT_STEP },
            backend: Backend::FullLine,
            cutoff: bulk::torus_cutoff(v, w, n),
            dirac: data,
            theta,
            min_modulus,
        };
        p.backend = if p.required_half_length(Backend::Truncated) <= MAX_TRUNCATED_HALF_LENGTH {
            Backend::Truncated
        } else {
            Backend::FullLine
        };
        p.half_length = p.required_half_length(p.backend).ceil();
        Ok(p)
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self.half_length = self.required_half_length(backend).ceil();
        self
    }

    pub fn with_half_length(mut self, half_length: f64) -> Self {
        self.half_length = half_length;
        self
    }

    pub fn with_bump(mut self, bump: Bump) -> Self {
        self.bump = Some(bump);
        self.half_length = self.half_length.max(self.required_half_length(self.backend).ceil());
        self
    }

    pub fn with_profile(mut self, profile: TransitionProfile) -> Self {
        self.profile = profile;
        self.half_length = self.half_length.max(self.required_half_length(self.backend).ceil());
        self
    }

    pub fn with_discretization(mut self, d: Discretization) -> Self {
        self.discretization = d;
        self
    }

    /// Same potentials and profile at another adiabatic strength, on the full line.
    pub fn with_delta(&self, delta: f64) -> Self {
        let mut p = self.clone();
        p.delta = delta;
        p.backend = Backend::FullLine;
        p.half_length = p.required_half_length(Backend::FullLine).ceil();
        p
    }

    /// `|nu_star| / (delta min_t |theta(t)|)`.
    pub fn decay_length(&self) -> f64 {
        self.dirac.nu_star.abs() / (self.delta * self.min_modulus)
    }

    fn junction_extent(&self) -> f64 {
        PROFILE_WIDTHS * profile_width(&self.profile) / self.delta + self.bump.map_or(0.0, |b| b.half_width)
    }

    pub fn required_half_length(&self, backend: Backend) -> f64 {
        match backend {
            Backend::Truncated => DECAY_LENGTHS * self.decay_length() + self.junction_extent(),
            Backend::FullLine => self.junction_extent().max(1.0),
        }
    }

    /// Junction window used by the full-line oracle.
    pub fn oracle_half_length(&self) -> f64 {
        match self.backend {
            Backend::FullLine => self.half_length,
            Backend::Truncated => self.required_half_length(Backend::FullLine).ceil(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let required = self.required_half_length(self.backend);
        if self.half_length < required {
            return Err(Error::DomainTooSmall { half_length: self.half_length, required });
        }
        Ok(())
    }

    pub fn potential(&self, t: f64) -> LinePotential {
        LinePotential {
            v: self.v.evaluator(),
            w: self.w.evaluator(),
            wt: self.w.translate(t).evaluator(),
            profile: self.profile,
            delta: self.delta,
            bump: self.bump,
        }
    }

    pub fn gap_window(&self, t: f64) -> Result<GapWindow> {
        let left = bulk::gap_edges(&self.v, &self.w, self.n, self.delta, 0.0, self.cutoff)?;
        let right = bulk::gap_edges(&self.v, &self.w, self.n, self.delta, t, self.cutoff)?;
        let lower = left.0.max(right.0);
        let upper = left.1.min(right.1);
        let e_ref = 0.5 * (right.0 + right.1);
        if !(e_ref > lower && e_ref < upper) || upper - lower <= bulk::H1_TOL {
            return Err(Error::H1Violated { gap: upper - lower, s: self.delta, t });
        }
        Ok(GapWindow { t, left, right, lower, upper, e_ref, half_gap: 0.5 * (right.1 - right.0) })
    }
}

/// Essential gap of `P_delta(t)` and the reference energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapWindow {
    pub t: f64,
    /// Gap of the left bulk `V + delta W`.
    pub left: (f64, f64),
    /// Gap of the right bulk `V + delta W_t`.
    pub right: (f64, f64),
    pub lower: f64,
    pub upper: f64,
    /// Midpoint of the right bulk gap.
    pub e_ref: f64,
    pub half_gap: f64,
}

impl GapWindow {
    /// Search interval: the common gap with a small margin removed at each end.
    pub fn search(&self) -> (f64, f64) {
        let m = WINDOW_MARGIN * (self.upper - self.lower);
        (self.lower + m, self.upper - m)
    }
}

/// Discretized truncated operator.
#[derive(Debug, Clone)]
pub enum EdgeOperator {
    FiniteDifference { matrix: Pentadiagonal, grid: Vec<f64>, step: f64 },
    SineSpectral { matrix: DMatrix<f64>, half_length: f64 },
}

/// Assembles the Dirichlet operator on `[-L, L]` for the problem's discretization.
pub fn assemble_edge_operator(prob: &EdgeProblem, t: f64) -> Result<EdgeOperator> {
    let required = prob.required_half_length(Backend::Truncated);
    if prob.half_length < required {
        return Err(Error::DomainTooSmall { half_length: prob.half_length, required });
    }
    let pot = prob.potential(t);
    let l = prob.half_length;
    match prob.discretization {
        Discretization::FiniteDifference { step } => {
            let cells = (2.0 * l / step).round() as usize;
            let cells = cells + cells % 2;
            let h = 2.0 * l / cells as f64;
            let grid: Vec<f64> = (1..cells).map(|i| -l + i as f64 * h).collect();
            let inv = 1.0 / (12.0 * h * h);
            let n = grid.len();
            let mut matrix = Pentadiagonal {
                diag: grid.iter().map(|&x| 30.0 * inv + pot.eval(x)).collect(),
                off1: vec![-16.0 * inv; n - 1],
                off2: vec![inv; n - 2],
            };
            // odd reflection through each wall for the ghost node beyond it
            matrix.diag[0] -= inv;
            matrix.diag[n - 1] -= inv;
            Ok(EdgeOperator::FiniteDifference { matrix, grid, step: h })
        }
        Discretization::SineSpectral { modes } => {
            let bw = prob.v.bandwidth().max(prob.w.bandwidth());
            Ok(EdgeOperator::SineSpectral { matrix: sine::assemble(&pot, l, modes, bw), half_length: l })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeState {
    pub energy: f64,
    /// `<x>` under `|u|^2` (NaN for the full-line backend).
    pub center: f64,
    /// Inverse participation ratio, in inverse length units.
    pub ipr: f64,
    pub junction: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpectrum {
    pub window: GapWindow,
    pub states: Vec<EdgeState>,
}

impl EdgeSpectrum {
    pub fn junction_energies(&self) -> Vec<f64> {
        self.states.iter().filter(|s| s.junction).map(|s| s.energy).collect()
    }
}

fn truncated_states(prob: &EdgeProblem, t: f64, lo: f64, hi: f64) -> Result<Vec<EdgeState>> {
    let half = 0.5 * prob.half_length;
    let classify = |energy: f64, center: f64, ipr: f64| EdgeState { energy, center, ipr, junction: center.abs() <= half };
    match assemble_edge_operator(prob, t)? {
        EdgeOperator::FiniteDifference { matrix, grid, step } => {
            let mut out = Vec::new();
            for e in matrix.eigenvalues_in(lo, hi, EIGEN_TOL) {
                let u = matrix.eigenvector(e)?;
                let (mut w0, mut w1, mut w2) = (0.0, 0.0, 0.0);
                for (x, ui) in grid.iter().zip(&u) {
                    let d = ui * ui;
                    w0 += d;
                    w1 += x * d;
                    w2 += d * d;
                }
                out.push(classify(e, w1 / w0, w2 / (w0 * w0 * step)));
            }
            Ok(out)
        }
        EdgeOperator::SineSpectral { matrix, half_length } => Ok(sine::states_in(&matrix, half_length, lo, hi)?
            .into_iter()
            .map(|s| classify(s.energy, s.center, s.ipr))
            .collect()),
    }
}

/// In-gap eigenvalues of `P_delta(t)` inside the search window.
pub fn edge_spectrum_in_gap(prob: &EdgeProblem, t: f64) -> Result<EdgeSpectrum> {
    prob.validate()?;
    let window = prob.gap_window(t)?;
    let (lo, hi) = window.search();
    let states = match prob.backend {
        Backend::Truncated => truncated_states(prob, t, lo, hi)?,
        Backend::FullLine => full_line::roots_in(&prob.potential(t), prob.half_length, lo, hi)?
            .into_iter()
            .map(|energy| EdgeState { energy, center: f64::NAN, ipr: f64::NAN, junction: true })
            .collect(),
    };
    Ok(EdgeSpectrum { window, states })
}

/// Floquet matching value at `energy`, independent of any truncation.
pub fn wronskian_oracle(prob: &EdgeProblem, t: f64, energy: f64) -> Result<full_line::MatchingValue> {
    full_line::matching(&prob.potential(t), prob.oracle_half_length(), energy)
}

/// Full-line eigenvalues of `P_delta(t)` in the search window.
pub fn oracle_roots(prob: &EdgeProblem, t: f64) -> Result<Vec<f64>> {
    let (lo, hi) = prob.gap_window(t)?.search();
    full_line::roots_in(&prob.potential(t), prob.oracle_half_length(), lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowOptions {
    /// Initial number of `t` intervals on `[0, 2 pi]`.
    pub samples: usize,
    /// Reference is `E_ref(t) + wobble (gap / 2) sin t`.
    pub wobble: f64,
    pub max_depth: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { samples: 64, wobble: 0.0, max_depth: 14 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFlowTrace {
    pub backend: Backend,
    pub half_length: f64,
    pub trace: FlowTrace,
}

impl SpectralFlowTrace {
    pub fn total(&self) -> i64 {
        self.trace.total
    }
}

/// Distance from the classification threshold `L / 2` below which a state is not classified.
const CLASSIFICATION_BAND: f64 = 2.0;

/// Signed count of downward crossings of the reference energy by junction branches.
pub fn spectral_flow(prob: &EdgeProblem, opts: FlowOptions) -> Result<SpectralFlowTrace> {
    prob.validate()?;
    let grid: Vec<f64> = (0..=opts.samples).map(|i| 2.0 * PI * i as f64 / opts.samples as f64).collect();
    let tracking = TrackingOptions { max_depth: opts.max_depth, ..TrackingOptions::default() };
    let half = 0.5 * prob.half_length;
    let sample = |t: f64| -> Result<FlowSample> {
        let spectrum = edge_spectrum_in_gap(prob, t)?;
        let (lo, hi) = spectrum.window.search();
        let reference = spectrum.window.e_ref + opts.wobble * spectrum.window.half_gap * t.sin();
        let central = tracking.central_fraction * (reference - lo).min(hi - reference);
        let mut roots = Vec::new();
        let mut centers = Vec::new();
        let mut excluded = Vec::new();
        for s in &spectrum.states {
            if prob.backend == Backend::Truncated
                && (s.energy - reference).abs() < central
                && (s.center.abs() - half).abs() < CLASSIFICATION_BAND
            {
                return Err(Error::UnclassifiedBranch { center: s.center });
            }
            if s.junction {
                roots.push(s.energy);
                centers.push(s.center);
            } else {
                excluded.push((s.energy, s.center));
            }
        }
        Ok(FlowSample { t, reference, lower: lo, upper: hi, roots, centers, excluded })
    };
    let trace = flow::track(sample, &grid, tracking)?;
    Ok(SpectralFlowTrace { backend: prob.backend, half_length: prob.half_length, trace })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub delta: f64,
    pub eigenvalues: Vec<f64>,
    pub predicted: Vec<f64>,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub t: f64,
    /// Bound states of the effective Dirac operator at `t`.
    pub mu: Vec<f64>,
    pub rows: Vec<ScalingRow>,
    /// `max_deviation[i] / max_deviation[i + 1]`.
    pub ratios: Vec<f64>,
}

/// Compares full-line eigenvalues of `P_delta(t)` with `E_star + delta mu_j(t)`.
///
/// The window is `E_star + delta (a, b)` with `a` halfway between `-theta_-` and the
/// lowest Dirac eigenvalue and `b` halfway between the highest one and `theta_-`.
pub fn theorem34_scaling(base: &EdgeProblem, t: f64, deltas: &[f64]) -> Result<ScalingTable> {
    let family = DiracLineFamily::effective(base.dirac.nu_star, &base.theta, base.profile);
    let spectrum = dirac_line::dirac_bound_states(&family.at(t))?;
    let edge = spectrum.gap_edge;
    let mu = spectrum.eigenvalues.clone();
    let (a, b) = match (mu.first(), mu.last()) {
        (Some(&lo), Some(&hi)) => (0.5 * (lo - edge), 0.5 * (hi + edge)),
        _ => (-0.5 * edge, 0.5 * edge),
    };
    let e_star = base.dirac.e_star;
    let mut rows = Vec::new();
    for &delta in deltas {
        let prob = base.with_delta(delta);
        let eigenvalues =
            full_line::roots_in(&prob.potential(t), prob.half_length, e_star + delta * a, e_star + delta * b)?;
        if eigenvalues.len() != mu.len() {
            return Err(Error::CountMismatch { expected: mu.len(), found: eigenvalues.len() });
        }
        let predicted: Vec<f64> = mu.iter().map(|m| e_star + delta * m).collect();
        let max_deviation = eigenvalues.iter().zip(&predicted).map(|(l, p)| (l - p).abs()).fold(0.0, f64::max);
        rows.push(ScalingRow { delta, eigenvalues, predicted, max_deviation });
    }
    let ratios = rows.windows(2).map(|w| w[0].max_deviation / w[1].max_deviation).collect();
    Ok(ScalingTable { t, mu, rows, ratios })
}

#[cfg(test)]
mod tests;
