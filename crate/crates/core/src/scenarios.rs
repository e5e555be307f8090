//! Example potential pairs with known invariants, and the end-to-end check that
//! the edge flow, the bulk Chern number and the signed winding agree.

use crate::bulk;
use crate::coupling::{self, CouplingCurve};
use crate::dirac::{self, DiracData};
use crate::dirac_line::{self, DiracLineFamily, TransitionProfile};
use crate::edge::{self, Backend, Bump, Discretization, EdgeProblem, FlowOptions, SpectralFlowTrace};
use crate::error::{Error, Result};
use crate::potential::{SymmetryKind, TrigPolynomial, TrigRecord};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::time::Instant;

pub const LEM1F_MAX_EPSILON: f64 = 0.1;
pub const LEM2N_MAX_EPSILON: f64 = 0.4;
pub const LEM1F_DEFAULT_EPSILON: f64 = 0.05;
pub const LEM2N_DEFAULT_EPSILON: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub v: TrigPolynomial,
    pub w: TrigPolynomial,
    pub n: usize,
    pub epsilon: f64,
    pub predicted_winding: i64,
    pub predicted_index: i64,
}

/// Serializable form of [`Scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRecord {
    pub id: String,
    pub v: TrigRecord,
    pub w: TrigRecord,
    pub n: usize,
    pub epsilon: f64,
    pub predicted_winding: i64,
    pub predicted_index: i64,
}

/// `(-1)^((n - 1) / 2)` for odd `n`.
pub fn gap_sign(n: usize) -> i64 {
    if (n / 2).is_multiple_of(2) {
        1
    } else {
        -1
    }
}

impl Scenario {
    pub fn to_record(&self) -> ScenarioRecord {
        ScenarioRecord {
            id: self.id.clone(),
            v: self.v.to_record(),
            w: self.w.to_record(),
            n: self.n,
            epsilon: self.epsilon,
            predicted_winding: self.predicted_winding,
            predicted_index: self.predicted_index,
        }
    }

    pub fn from_record(r: &ScenarioRecord) -> Result<Self> {
        let sc = Scenario {
            id: r.id.clone(),
            v: TrigPolynomial::from_record(&r.v)?,
            w: TrigPolynomial::from_record(&r.w)?,
            n: r.n,
            epsilon: r.epsilon,
            predicted_winding: r.predicted_winding,
            predicted_index: r.predicted_index,
        };
        sc.validate()?;
        Ok(sc)
    }

    /// Checks the record's own consistency and the symmetry classes of `V` and `W`.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n.is_multiple_of(2) {
            return Err(Error::ParameterViolation(format!("gap index {} must be odd", self.n)));
        }
        if self.predicted_index != gap_sign(self.n) * self.predicted_winding {
            return Err(Error::ParameterViolation(format!(
                "predicted index {} is not (-1)^((n-1)/2) times the predicted winding {}",
                self.predicted_index, self.predicted_winding
            )));
        }
        if !self.v.check_symmetry(SymmetryKind::HalfPeriodEven).holds {
            return Err(Error::SymmetryViolated("V must satisfy V(x + 1/2) = V(x)".into()));
        }
        if !self.w.check_symmetry(SymmetryKind::HalfPeriodOdd).holds {
            return Err(Error::SymmetryViolated("W must satisfy W(x + 1/2) = -W(x)".into()));
        }
        Ok(())
    }

    /// Same scenario with `W` replaced.
    pub fn with_w(&self, w: TrigPolynomial) -> Self {
        Self { w, ..self.clone() }
    }
}

fn check_epsilon(eps: f64, max: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= max) {
        return Err(Error::ParameterViolation(format!("epsilon {eps} must lie in (0, {max}]")));
    }
    Ok(())
}

/// `(V, W) = (eps V0, eps W0)` with `V0` even under half-period shifts and `W0` odd.
pub fn scenario_lem1f(n: usize, epsilon: f64, base_v: &TrigPolynomial, base_w: &TrigPolynomial) -> Result<Scenario> {
    if n.is_multiple_of(2) {
        return Err(Error::ParameterViolation(format!("gap index {n} must be odd")));
    }
    check_epsilon(epsilon, LEM1F_MAX_EPSILON)?;
    if !base_v.check_symmetry(SymmetryKind::HalfPeriodEven).holds {
        return Err(Error::FourierConditionViolated("base V has odd Fourier modes".into()));
    }
    if !base_w.check_symmetry(SymmetryKind::HalfPeriodOdd).holds {
        return Err(Error::FourierConditionViolated("base W has even Fourier modes".into()));
    }
    if base_w.coeff(n as i64).norm() == 0.0 {
        return Err(Error::FourierConditionViolated(format!("base W has no mode {n}")));
    }
    if n != 1 && base_v.coeff(n as i64 - 1).norm() == 0.0 {
        return Err(Error::FourierConditionViolated(format!("base V has no mode {}", n - 1)));
    }
    let winding = -gap_sign(n) * n as i64;
    Ok(Scenario {
        id: format!("lem1f-{n}"),
        v: base_v.scale(epsilon),
        w: base_w.scale(epsilon),
        n,
        epsilon,
        predicted_winding: winding,
        predicted_index: -(n as i64),
    })
}

/// `V = eps^2 cos(2 pi (n - m) x) + eps^3 cos(2 pi (n - 1) x)`, `W = 2 eps^4 cos(2 pi m x)`.
pub fn scenario_lem2n(n: usize, m: i64, epsilon: f64) -> Result<Scenario> {
    if n.is_multiple_of(2) {
        return Err(Error::ParameterViolation(format!("gap index {n} must be odd and positive")));
    }
    if m % 2 == 0 {
        return Err(Error::ParameterViolation(format!("m = {m} must be odd")));
    }
    if m.unsigned_abs() as usize == n {
        return Err(Error::ParameterViolation(format!("|m| = {} equals the gap index", m.abs())));
    }
    check_epsilon(epsilon, LEM2N_MAX_EPSILON)?;
    let ni = n as i64;
    let v = TrigPolynomial::cosine(ni - m, epsilon.powi(2)).add(&TrigPolynomial::cosine(ni - 1, epsilon.powi(3)));
    let w = TrigPolynomial::cosine(m, 2.0 * epsilon.powi(4));
    Ok(Scenario {
        id: format!("lem2n-{n}-{m}"),
        v,
        w,
        n,
        epsilon,
        predicted_winding: -gap_sign(n) * m,
        predicted_index: -m,
    })
}

/// Order-one coupling with the invariants of `lem1f-1`; small domains, fast runs.
pub fn toy() -> Scenario {
    Scenario {
        id: "toy".into(),
        v: TrigPolynomial::cosine(2, 1.0),
        w: TrigPolynomial::cosine(1, 2.0),
        n: 1,
        epsilon: 1.0,
        predicted_winding: -1,
        predicted_index: -1,
    }
}

pub const BUILTIN_IDS: [&str; 4] = ["lem2n-1-3", "lem1f-1", "lem1f-3", "toy"];

pub fn builtin(id: &str) -> Result<Scenario> {
    let base_v = TrigPolynomial::cosine(2, 1.0);
    match id {
        "lem2n-1-3" => scenario_lem2n(1, 3, LEM2N_DEFAULT_EPSILON),
        "lem1f-1" => scenario_lem1f(1, LEM1F_DEFAULT_EPSILON, &base_v, &TrigPolynomial::cosine(1, 2.0)),
        "lem1f-3" => scenario_lem1f(3, LEM1F_DEFAULT_EPSILON, &base_v, &TrigPolynomial::cosine(3, 2.0)),
        "toy" => Ok(toy()),
        other => Err(Error::ConfigInvalid(format!("unknown scenario id {other:?}; known: {}", BUILTIN_IDS.join(", ")))),
    }
}

/// Numerical budgets of the verification pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineBudget {
    /// Plane-wave cutoff for torus eigensolves; derived from the bandwidths when absent.
    pub cutoff: Option<usize>,
    pub chern_grid: usize,
    pub chern_s: Vec<f64>,
    pub h1_s_samples: usize,
    pub h1_t_samples: usize,
    pub dirac_samples: usize,
    pub dirac_profile: TransitionProfile,
    pub edge_profile: TransitionProfile,
    pub edge: FlowOptions,
    pub backend: Option<Backend>,
    pub half_length: Option<f64>,
    pub discretization: Option<Discretization>,
    pub bump: Option<Bump>,
}

impl Default for PipelineBudget {
    fn default() -> Self {
        Self {
            cutoff: None,
            chern_grid: 24,
            chern_s: vec![0.5, 1.0],
            h1_s_samples: 4,
            h1_t_samples: 32,
            dirac_samples: 64,
            dirac_profile: TransitionProfile::Tanh { width: 1.0 },
            edge_profile: TransitionProfile::Tanh { width: 1.0 },
            edge: FlowOptions::default(),
            backend: None,
            half_length: None,
            discretization: None,
            bump: None,
        }
    }
}

impl PipelineBudget {
    /// Builds the edge problem of `sc` with the overrides of this budget.
    pub fn edge_problem(&self, sc: &Scenario) -> Result<EdgeProblem> {
        let mut p = EdgeProblem::new(&sc.v, &sc.w, sc.n, self.edge_profile, 1.0)?;
        if let Some(b) = self.bump {
            p = p.with_bump(b);
        }
        if let Some(b) = self.backend {
            p = p.with_backend(b);
        }
        if let Some(d) = self.discretization {
            p = p.with_discretization(d);
        }
        if let Some(l) = self.half_length {
            p = p.with_half_length(l);
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChernEntry {
    pub s: f64,
    pub c1: i64,
    pub raw: f64,
    /// Final grid size after refinement.
    pub n_xi: usize,
    pub n_t: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub n: usize,
    pub predicted_index: i64,
    pub e_star: Option<f64>,
    pub nu_star: Option<f64>,
    pub h1_margin: Option<f64>,
    pub h2_margin: Option<f64>,
    pub winding: Option<i64>,
    pub chern: Vec<ChernEntry>,
    pub dirac_flow: Option<i64>,
    pub edge_flow: Option<i64>,
    pub edge_backend: Option<Backend>,
    pub edge_half_length: Option<f64>,
    /// Parameter values at which a junction branch meets the reference energy.
    pub crossing_events: Option<usize>,
    /// Hypothesis failure that stopped the pipeline.
    pub violation: Option<String>,
    /// Absent when a hypothesis failed.
    pub verdict: Option<bool>,
    pub timings: Vec<Timing>,
}

impl VerificationReport {
    fn new(sc: &Scenario) -> Self {
        Self {
            scenario: sc.id.clone(),
            n: sc.n,
            predicted_index: sc.predicted_index,
            e_star: None,
            nu_star: None,
            h1_margin: None,
            h2_margin: None,
            winding: None,
            chern: Vec::new(),
            dirac_flow: None,
            edge_flow: None,
            edge_backend: None,
            edge_half_length: None,
            crossing_events: None,
            violation: None,
            verdict: None,
            timings: Vec::new(),
        }
    }

    /// `edge_flow = c1 (every s) = (-1)^((n-1)/2) m = predicted_index`.
    pub fn all_equal(&self) -> bool {
        let (Some(edge), Some(m)) = (self.edge_flow, self.winding) else {
            return false;
        };
        let target = self.predicted_index;
        edge == target
            && gap_sign(self.n) * m == target
            && !self.chern.is_empty()
            && self.chern.iter().all(|c| c.c1 == target)
    }

    /// Plain `key: value` lines.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        let mut s = String::new();
        let mut line = |k: &str, v: String| s.push_str(&format!("{k}: {v}\n"));
        line("scenario", self.scenario.clone());
        line("gap_index", self.n.to_string());
        line("predicted_index", self.predicted_index.to_string());
        line("e_star", opt(self.e_star.map(|x| x.to_string())));
        line("nu_star", opt(self.nu_star.map(|x| x.to_string())));
        line("h1_margin", opt(self.h1_margin.map(|x| format!("{x:e}"))));
        line("h2_margin", opt(self.h2_margin.map(|x| format!("{x:e}"))));
        line("winding", opt(self.winding.map(|x| x.to_string())));
        for c in &self.chern {
            line(&format!("chern[s={}]", c.s), format!("{} (raw {}, grid {}x{})", c.c1, c.raw, c.n_xi, c.n_t));
        }
        line("dirac_flow", opt(self.dirac_flow.map(|x| x.to_string())));
        line("edge_flow", opt(self.edge_flow.map(|x| x.to_string())));
        line("edge_backend", opt(self.edge_backend.map(|b| format!("{b:?}"))));
        line("edge_half_length", opt(self.edge_half_length.map(|x| x.to_string())));
        line("crossing_events", opt(self.crossing_events.map(|x| x.to_string())));
        line("violation", opt(self.violation.clone()));
        line("verdict", opt(self.verdict.map(|x| x.to_string())));
        for t in &self.timings {
            line(&format!("time[{}]", t.stage), format!("{:.3}s", t.seconds));
        }
        s
    }
}

/// Everything computed by [`verify_pipeline`], including the traces behind the report.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub report: VerificationReport,
    pub coupling: Option<coupling::CouplingCurve>,
    pub edge_trace: Option<SpectralFlowTrace>,
}

/// Effective Dirac family after `x -> x theta_F / |nu|`, `E -> E / theta_F`: unit velocity
/// and unit coupling at `t = pi`. The flow is unchanged and the decay length is order one
/// even when `|theta|` is tiny.
pub fn unit_dirac_family(data: &DiracData, curve: &CouplingCurve, profile: TransitionProfile) -> DiracLineFamily {
    let unit = curve.series.scale(Complex64::new(1.0 / curve.theta_f, 0.0));
    DiracLineFamily::effective(data.nu_sign(), &unit, profile)
}

fn timed<T>(report: &mut VerificationReport, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f();
    report.timings.push(Timing { stage: stage.into(), seconds: start.elapsed().as_secs_f64() });
    out
}

/// Runs the hypotheses checks, winding, Chern numbers, Dirac-line flow and edge flow.
///
/// A failed hypothesis ends the run with `verdict = None` and the reason recorded;
/// any other error is returned.
pub fn verify_pipeline(sc: &Scenario, budget: &PipelineBudget) -> Result<VerificationReport> {
    run_pipeline(sc, budget).map(|r| r.report)
}

pub fn run_pipeline(sc: &Scenario, budget: &PipelineBudget) -> Result<PipelineRun> {
    sc.validate()?;
    let mut run = PipelineRun { report: VerificationReport::new(sc), coupling: None, edge_trace: None };
    match stages(sc, budget, &mut run) {
        Ok(()) => {
            run.report.verdict = Some(run.report.all_equal());
            Ok(run)
        }
        Err(e) if e.is_hypothesis_violation() => {
            run.report.violation = Some(e.to_string());
            Ok(run)
        }
        Err(e) => Err(e),
    }
}

fn stages(sc: &Scenario, budget: &PipelineBudget, run: &mut PipelineRun) -> Result<()> {
    let r = &mut run.report;
    let data = timed(r, "dirac_point", || dirac::find_dirac_point_default(&sc.v, sc.n))?;
    r.e_star = Some(data.e_star);
    r.nu_star = Some(data.nu_star);

    let curve = timed(r, "coupling", || coupling::coupling_curve(&data, &sc.w))?;
    r.h2_margin = Some(curve.min_modulus);
    r.winding = Some(curve.winding);

    let cutoff = budget.cutoff.unwrap_or_else(|| bulk::torus_cutoff(&sc.v, &sc.w, sc.n));
    let s_grid: Vec<f64> = (1..=budget.h1_s_samples).map(|k| k as f64 / budget.h1_s_samples as f64).collect();
    let t_grid = bulk::uniform_grid(budget.h1_t_samples);
    let gaps = timed(r, "h1_scan", || bulk::gap_scan_h1(&sc.v, &sc.w, sc.n, &s_grid, &t_grid, cutoff))?;
    r.h1_margin = Some(gaps.min_gap);

    for &s in &budget.chern_s {
        let c = timed(r, &format!("chern_s{s}"), || bulk::chern_number(&sc.v, &sc.w, sc.n, s, budget.chern_grid, cutoff))?;
        r.chern.push(ChernEntry { s, c1: c.c1, raw: c.raw, n_xi: c.n_xi, n_t: c.n_t });
    }

    let family = unit_dirac_family(&data, &curve, budget.dirac_profile);
    let dflow = timed(r, "dirac_flow", || dirac_line::dirac_spectral_flow(&family, budget.dirac_samples))?;
    r.dirac_flow = Some(dflow.total);
    run.coupling = Some(curve);

    let prob = budget.edge_problem(sc)?;
    r.edge_backend = Some(prob.backend);
    r.edge_half_length = Some(prob.half_length);
    let trace = timed(r, "edge_flow", || edge::spectral_flow(&prob, budget.edge))?;
    r.edge_flow = Some(trace.total());
    r.crossing_events = Some(trace.trace.crossing_events());
    run.edge_trace = Some(trace);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lem1f_predictions() {
        let v0 = TrigPolynomial::cosine(2, 1.0);
        let s1 = scenario_lem1f(1, 0.05, &v0, &TrigPolynomial::cosine(1, 2.0)).unwrap();
        assert_eq!((s1.predicted_winding, s1.predicted_index), (-1, -1));
        let s3 = scenario_lem1f(3, 0.05, &v0, &TrigPolynomial::cosine(3, 2.0)).unwrap();
        assert_eq!((s3.predicted_winding, s3.predicted_index), (3, -3));
        s3.validate().unwrap();
    }

    #[test]
    fn lem1f_requires_mode_n_of_w() {
        let err = scenario_lem1f(3, 0.05, &TrigPolynomial::cosine(2, 1.0), &TrigPolynomial::cosine(1, 2.0));
        assert!(matches!(err, Err(Error::FourierConditionViolated(_))));
    }

    #[test]
    fn lem1f_requires_mode_n_minus_one_of_v() {
        let err = scenario_lem1f(3, 0.05, &TrigPolynomial::cosine(4, 1.0), &TrigPolynomial::cosine(3, 2.0));
        assert!(matches!(err, Err(Error::FourierConditionViolated(_))));
        // n = 1 has no condition on V
        scenario_lem1f(1, 0.05, &TrigPolynomial::zero(), &TrigPolynomial::cosine(1, 2.0)).unwrap();
    }

    #[test]
    fn lem1f_rejects_large_epsilon() {
        let err = scenario_lem1f(1, 0.2, &TrigPolynomial::cosine(2, 1.0), &TrigPolynomial::cosine(1, 2.0));
        assert!(matches!(err, Err(Error::ParameterViolation(_))));
    }

    #[test]
    fn lem2n_potentials_and_predictions() {
        let sc = scenario_lem2n(1, 3, 0.3).unwrap();
        assert_eq!(sc.predicted_index, -3);
        assert_eq!(sc.predicted_winding, -3);
        assert!((sc.v.coeff(-2).re - 0.5 * 0.09).abs() < 1e-16);
        assert!((sc.v.coeff(0).re - 0.027).abs() < 1e-16);
        assert!((sc.w.coeff(3).re - 0.0081).abs() < 1e-16);
        assert_eq!(scenario_lem2n(1, -3, 0.3).unwrap().predicted_index, 3);
        assert!(matches!(scenario_lem2n(1, 1, 0.3), Err(Error::ParameterViolation(_))));
        assert!(matches!(scenario_lem2n(3, -3, 0.3), Err(Error::ParameterViolation(_))));
        assert!(matches!(scenario_lem2n(1, 3, 0.5), Err(Error::ParameterViolation(_))));
    }

    #[test]
    fn builtins_are_consistent() {
        for id in BUILTIN_IDS {
            let sc = builtin(id).unwrap();
            assert_eq!(sc.id, id);
            sc.validate().unwrap();
        }
        assert!(matches!(builtin("nope"), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn zero_coupling_reports_h2_without_verdict() {
        let sc = toy().with_w(TrigPolynomial::zero());
        let report = verify_pipeline(&sc, &PipelineBudget::default()).unwrap();
        assert!(report.verdict.is_none());
        assert!(report.violation.as_deref().unwrap().contains("(H2)"), "{:?}", report.violation);
    }

    #[test]
    fn toy_pipeline_agrees() {
        let budget = PipelineBudget { chern_grid: 12, ..PipelineBudget::default() };
        let report = verify_pipeline(&toy(), &budget).unwrap();
        assert_eq!(report.verdict, Some(true), "{}", report.to_text());
        assert_eq!(report.dirac_flow, Some(-1));
        assert!(report.crossing_events.unwrap() >= 1);
    }

    proptest! {
        #[test]
        fn records_round_trip_bit_exactly(n in 0usize..3, m in -3i64..=3, eps in 0.01f64..0.4) {
            let n = 2 * n + 1;
            let m = 2 * m + 1;
            prop_assume!(m.unsigned_abs() as usize != n);
            let sc = scenario_lem2n(n, m, eps).unwrap();
            let text = serde_json::to_string(&sc.to_record()).unwrap();
            let back: ScenarioRecord = serde_json::from_str(&text).unwrap();
            let sc2 = Scenario::from_record(&back).unwrap();
            prop_assert_eq!(&sc2, &sc);
            prop_assert_eq!(sc2.epsilon.to_bits(), sc.epsilon.to_bits());
        }
    }
}
