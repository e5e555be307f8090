//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

use dislocation::bloch::{self, assemble_bloch, parity_spectra, quasimode_certificate};
use dislocation::bulk::{self, chern_fhs, family_potential, torus_eigenframe};
use dislocation::coupling::{coupling_curve, diagonal_check};
use dislocation::dirac::find_dirac_point_default;
use dislocation::dirac_line::{dirac_bound_states, step_eigenvalue, DiracLineFamily, TransitionProfile};
use dislocation::edge::{
    edge_spectrum_in_gap, oracle_roots, spectral_flow, theorem34_scaling, Backend, Bump, EdgeProblem, FlowOptions,
};
use dislocation::scenarios::{builtin, gap_sign, verify_pipeline, PipelineBudget, Scenario};
use dislocation::tight_binding::{curvature_integral, enclosure_check};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e2s(e: dislocation::Error) -> String {
    e.to_string()
}

fn triangle(id: &str, expected_winding: i64, expected_index: i64) -> Outcome {
    let sc = builtin(id).map_err(e2s)?;
    let rep = verify_pipeline(&sc, &PipelineBudget::default()).map_err(e2s)?;
    let chern: Vec<i64> = rep.chern.iter().map(|c| c.c1).collect();
    let summary = format!(
        "{id}: winding {:?}, c1 {:?} at s = {:?}, dirac flow {:?}, edge flow {:?} ({:?} backend)",
        rep.winding,
        chern,
        rep.chern.iter().map(|c| c.s).collect::<Vec<_>>(),
        rep.dirac_flow,
        rep.edge_flow,
        rep.edge_backend
    );
    check(rep.violation.is_none(), format!("{summary}; hypothesis violated: {:?}", rep.violation))?;
    check(rep.winding == Some(expected_winding), format!("{summary}; expected winding {expected_winding}"))?;
    check(chern.len() == 2 && chern.iter().all(|&c| c == expected_index), format!("{summary}; Chern mismatch"))?;
    check(rep.dirac_flow == Some(expected_index), format!("{summary}; Dirac flow mismatch"))?;
    check(rep.edge_flow == Some(expected_index), format!("{summary}; edge flow mismatch"))?;
    check(rep.verdict == Some(true), format!("{summary}; verdict {:?}", rep.verdict))?;
    Ok(summary)
}

fn criterion_1() -> Outcome {
    triangle("lem2n-1-3", -3, -3)
}

fn criterion_2() -> Outcome {
    let one = triangle("lem1f-1", -1, -1)?;
    let three = triangle("lem1f-3", 3, -3)?;
    check(gap_sign(3) == -1, "gap sign at n = 3 is not -1")?;
    Ok(format!("{one}; {three}"))
}

fn criterion_3() -> Outcome {
    let theta_star = Complex64::from_polar(0.8, 0.6);
    let mut worst: f64 = 0.0;
    for sign in [1.0, -1.0] {
        let fam = DiracLineFamily::model(sign, theta_star, 1, TransitionProfile::Step);
        for k in 0..32 {
            let t = 2.0 * PI * (k as f64 + 0.5) / 32.0;
            let spectrum = dirac_bound_states(&fam.at(t)).map_err(e2s)?;
            check(spectrum.eigenvalues.len() == 1, format!("t = {t}, sign {sign}: {} eigenvalues", spectrum.eigenvalues.len()))?;
            let exact = step_eigenvalue(t, sign, theta_star).map_err(e2s)?;
            worst = worst.max((spectrum.eigenvalues[0] - exact).abs());
        }
    }
    check(worst <= 1e-8, format!("max deviation {worst:e}"))?;
    Ok(format!("64 shooting eigenvalues, max deviation {worst:.2e}"))
}

fn criterion_4() -> Outcome {
    let sc = builtin("lem2n-1-3").map_err(e2s)?;
    let data = find_dirac_point_default(&sc.v, sc.n).map_err(e2s)?;
    let curve = coupling_curve(&data, &sc.w).map_err(e2s)?;
    let value = curvature_integral(&curve.series, 1.0, 256).map_err(e2s)?;
    let err = (value - curve.winding as f64).abs();
    check(err <= 1e-3, format!("integral {value} vs winding {}", curve.winding))?;
    Ok(format!("integral {value:.6} vs winding {} (error {err:.1e})", curve.winding))
}

fn criterion_5() -> Outcome {
    let sc = builtin("lem1f-1").map_err(e2s)?;
    let data = find_dirac_point_default(&sc.v, sc.n).map_err(e2s)?;
    let curve = coupling_curve(&data, &sc.w).map_err(e2s)?;
    let delta = 0.01;
    let ev = bloch::bands(&family_potential(&sc.v, &sc.w, delta, PI), PI, 2).map_err(e2s)?;
    let ratio = (ev[1] - ev[0]) / (2.0 * delta * curve.theta_f);
    check((0.95..=1.05).contains(&ratio), format!("ratio {ratio}"))?;
    Ok(format!("gap ratio {ratio:.6} at delta = {delta}"))
}

fn criterion_6() -> Outcome {
    let sc = builtin("lem1f-1").map_err(e2s)?;
    let base = EdgeProblem::new(&sc.v, &sc.w, sc.n, TransitionProfile::Tanh { width: 1.0 }, 1.0).map_err(e2s)?;
    let mut parts = Vec::new();
    for t in [PI / 2.0, PI, 1.5 * PI] {
        let table = theorem34_scaling(&base, t, &[0.04, 0.02]).map_err(e2s)?;
        let ratio = table.ratios[0];
        let counts: Vec<usize> = table.rows.iter().map(|r| r.eigenvalues.len()).collect();
        check(counts.iter().all(|&c| c == table.mu.len()), format!("t = {t}: counts {counts:?} vs {}", table.mu.len()))?;
        check((3.0..=5.0).contains(&ratio), format!("t = {t}: ratio {ratio}"))?;
        parts.push(format!("t = {t:.4}: {} states, ratio {ratio:.3}", table.mu.len()));
    }
    Ok(parts.join("; "))
}

fn criterion_7() -> Outcome {
    let sc = builtin("lem1f-1").map_err(e2s)?;
    let data = find_dirac_point_default(&sc.v, sc.n).map_err(e2s)?;
    let delta = 0.02;
    let xi: Vec<f64> = (0..9).map(|i| PI - 0.05 + 0.1 * i as f64 / 8.0).collect();
    let t: Vec<f64> = (0..9).map(|j| 2.0 * PI * j as f64 / 9.0).collect();
    let rep = enclosure_check(&sc.v, &sc.w, &data, delta, &xi, &t).map_err(e2s)?;
    check(rep.lower_excursion <= 1.0 && rep.upper_excursion <= 1.0, format!("{rep:?}"))?;
    let curve = coupling_curve(&data, &sc.w).map_err(e2s)?;
    let mut worst: f64 = 0.0;
    for &tt in &t {
        let lower = bloch::bands(&family_potential(&sc.v, &sc.w, 0.01, tt), PI, 1).map_err(e2s)?[0];
        let shift = 0.01 * curve.series.eval(tt).norm();
        worst = worst.max((lower - (data.e_star - shift)).abs() / shift);
    }
    check(worst <= 0.25, format!("relative deviation at xi = pi: {worst}"))?;
    Ok(format!(
        "excursions {:.3} / {:.3}; xi = pi relative deviation {worst:.3} at delta = 0.01",
        rep.lower_excursion, rep.upper_excursion
    ))
}

fn criterion_8() -> Outcome {
    let sc = builtin("lem2n-1-3").map_err(e2s)?;
    let budget = PipelineBudget::default();
    let base = budget.edge_problem(&sc).map_err(e2s)?;
    let flow = |p: &EdgeProblem, opts: FlowOptions| spectral_flow(p, opts).map(|t| t.total()).map_err(e2s);
    let reference = flow(&base, budget.edge)?;
    let runs = [
        ("doubled L", flow(&base.clone().with_half_length(2.0 * base.half_length), budget.edge)?),
        ("bump of height 5", flow(&base.clone().with_bump(Bump { height: 5.0, half_width: 1.0 }), budget.edge)?),
        ("wobble 0.2", flow(&base, FlowOptions { wobble: 0.2, ..budget.edge })?),
        ("step profile", flow(&base.clone().with_profile(TransitionProfile::Step), budget.edge)?),
    ];
    let text: Vec<String> = runs.iter().map(|(name, sf)| format!("{name}: {sf}")).collect();
    check(reference == sc.predicted_index, format!("reference flow {reference}"))?;
    check(runs.iter().all(|r| r.1 == reference), format!("reference {reference}; {}", text.join(", ")))?;
    Ok(format!("reference {reference}; {}", text.join(", ")))
}

fn structural(sc: &Scenario, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let data = find_dirac_point_default(&sc.v, sc.n).map_err(e2s)?;
    let curve = coupling_curve(&data, &sc.w).map_err(e2s)?;
    let anti = curve.antiperiodicity_defect();
    check(anti <= 1e-10, format!("{}: antiperiodicity {anti:e}", sc.id))?;
    check(curve.winding.rem_euclid(2) == 1, format!("{}: even winding {}", sc.id, curve.winding))?;
    let diag = (0..16).map(|k| diagonal_check(&data, &sc.w, 2.0 * PI * k as f64 / 16.0)).try_fold(0.0f64, |m, d| {
        d.map(|d| m.max(d))
    });
    let diag = diag.map_err(e2s)?;
    check(diag <= 1e-10, format!("{}: diagonal {diag:e}", sc.id))?;
    check(data.nu_star.signum() == gap_sign(sc.n) as f64, format!("{}: nu_star {}", sc.id, data.nu_star))?;

    let cutoff = bloch::default_cutoff(sc.v.bandwidth(), 8);
    let xi: Vec<f64> = (1..=64).map(|i| 2.0 * PI * i as f64 / 65.0).collect();
    let spectra: Vec<Vec<f64>> = xi.iter().map(|&x| parity_spectra(&sc.v, x, cutoff).map(|p| p.mu_e)).collect::<Result<_, _>>().map_err(e2s)?;
    for j in 0..4 {
        let dir = if j % 2 == 0 { 1.0 } else { -1.0 };
        for w in spectra.windows(2) {
            check(dir * (w[1][j] - w[0][j]) > 0.0, format!("{}: mu_e band {} not monotone", sc.id, j + 1))?;
        }
    }
    let at_pi = parity_spectra(&sc.v, PI, cutoff).map_err(e2s)?;
    let min_split = at_pi.mu_e.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    check(min_split > 1e-8, format!("{}: mu_e not simple ({min_split:e})", sc.id))?;

    let dim = 2 * cutoff + 1;
    for _ in 0..1000 {
        let x = rng.gen_range(0.0..2.0 * PI);
        let op = assemble_bloch(&sc.v, x, cutoff).map_err(e2s)?;
        let psi = DVector::from_fn(dim, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let energy = rng.gen_range(-50.0..500.0);
        let cert = quasimode_certificate(&op, &psi, energy).map_err(e2s)?;
        check(cert.holds, format!("{}: quasimode {cert:?}", sc.id))?;
    }
    Ok(format!("{}: m = {}, antiperiodicity {anti:.1e}, diagonal {diag:.1e}", sc.id, curve.winding))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut parts = Vec::new();
    for id in ["lem2n-1-3", "lem1f-1", "lem1f-3"] {
        parts.push(structural(&builtin(id).map_err(e2s)?, &mut rng)?);
    }
    let toy = builtin("toy").map_err(e2s)?;
    let field = torus_eigenframe(&toy.v, &toy.w, 1.0, 1, 16, 16, bulk::torus_cutoff(&toy.v, &toy.w, 1)).map_err(e2s)?;
    let plain = chern_fhs(&field).map_err(e2s)?;
    let gauged = chern_fhs(&field.regauge(|_, _| DMatrix::from_element(1, 1, Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)))))
        .map_err(e2s)?;
    check(plain.c1 == gauged.c1 && (plain.raw - gauged.raw).abs() < 1e-10, format!("FHS {plain:?} vs {gauged:?}"))?;
    parts.push(format!("FHS c1 {} unchanged under random phases", plain.c1));
    Ok(parts.join("; "))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let ids = ["toy", "lem1f-1"];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for _ in 0..8 {
        let id = ids[rng.gen_range(0..ids.len())];
        let t = rng.gen_range(0.05..2.0 * PI - 0.05);
        let sc = builtin(id).map_err(e2s)?;
        let prob = PipelineBudget::default().edge_problem(&sc).map_err(e2s)?;
        check(prob.backend == Backend::Truncated, format!("{id} is not on the truncated backend"))?;
        let truncated = edge_spectrum_in_gap(&prob, t).map_err(e2s)?.junction_energies();
        let oracle = oracle_roots(&prob, t).map_err(e2s)?;
        check(truncated.len() == oracle.len(), format!("{id} t = {t}: {truncated:?} vs {oracle:?}"))?;
        let dev = truncated.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        check(dev <= 1e-6, format!("{id} t = {t}: deviation {dev:e}"))?;
        worst = worst.max(dev);
        parts.push(format!("{id}@{t:.3}:{}", oracle.len()));
    }
    Ok(format!("max deviation {worst:.2e} over [{}]", parts.join(" ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("bulk-edge triangle, lem2n (1,3)", criterion_1),
        ("bulk-edge triangle, lem1f n = 1 and n = 3", criterion_2),
        ("closed-form step Dirac eigenvalue", criterion_3),
        ("tight-binding curvature integral", criterion_4),
        ("gap-size law", criterion_5),
        ("junction eigenvalue seeding", criterion_6),
        ("enclosure property", criterion_7),
        ("robustness of the edge flow", criterion_8),
        ("structural invariants", criterion_9),
        ("truncated vs full-line oracle", criterion_10),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let number = k + 1;
        if only.is_some_and(|o| o != number) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {number:>2} PASS [{secs:.1} s] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {number:>2} FAIL [{secs:.1} s] {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
