use super::*;

fn toy() -> (TrigPolynomial, TrigPolynomial) {
    (TrigPolynomial::cosine(2, 1.0), TrigPolynomial::cosine(1, 2.0))
}

fn toy_problem() -> EdgeProblem {
    let (v, w) = toy();
    EdgeProblem::new(&v, &w, 1, TransitionProfile::Tanh { width: 1.0 }, 1.0).unwrap()
}

#[test]
fn toy_defaults_to_truncated_backend() {
    let p = toy_problem();
    assert_eq!(p.backend, Backend::Truncated);
    assert!(p.half_length >= DECAY_LENGTHS * p.decay_length());
    p.validate().unwrap();
}

#[test]
fn short_domain_is_rejected() {
    let p = toy_problem().with_half_length(10.0);
    assert!(matches!(p.validate(), Err(Error::DomainTooSmall { .. })));
    assert!(matches!(assemble_edge_operator(&p, 0.0), Err(Error::DomainTooSmall { .. })));
}

#[test]
fn bump_changes_only_points_in_its_support() {
    let p = toy_problem();
    let h = DEFAULT_STEP;
    let with = p.clone().with_bump(Bump { height: 10.0, half_width: 1.0 });
    let p = p.with_half_length(with.half_length);
    let (EdgeOperator::FiniteDifference { matrix: a, .. }, EdgeOperator::FiniteDifference { matrix: b, .. }) =
        (assemble_edge_operator(&p, 1.0).unwrap(), assemble_edge_operator(&with, 1.0).unwrap())
    else {
        panic!("finite differences expected");
    };
    let changed = a.diag.iter().zip(&b.diag).filter(|(x, y)| x != y).count();
    assert_eq!(changed, (2.0 / h).round() as usize - 1);
    assert_eq!(a.off1, b.off1);
    assert_eq!(a.off2, b.off2);
}

#[test]
fn finite_differences_converge_at_fourth_order() {
    // free Dirichlet problem on [-1, 1]: eigenvalues (k pi / 2)^2
    let exact = (PI / 2.0).powi(2) * 9.0;
    let err = |cells: usize| {
        let h = 2.0 / cells as f64;
        let n = cells - 1;
        let inv = 1.0 / (12.0 * h * h);
        let mut m = Pentadiagonal { diag: vec![30.0 * inv; n], off1: vec![-16.0 * inv; n - 1], off2: vec![inv; n - 2] };
        m.diag[0] -= inv;
        m.diag[n - 1] -= inv;
        let ev = m.eigenvalues_in(exact - 1.0, exact + 1.0, 1e-13);
        (ev[0] - exact).abs()
    };
    let ratio = err(100) / err(200);
    assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
}

#[test]
fn gap_edge_energy_has_no_decaying_solution() {
    let p = toy_problem();
    let w = p.gap_window(1.0).unwrap();
    let err = wronskian_oracle(&p, 1.0, w.right.1).unwrap_err();
    assert!(matches!(err, Error::InGapViolation { .. }), "{err:?}");
}

#[test]
fn periodic_member_has_no_junction_states() {
    let p = toy_problem();
    let spectrum = edge_spectrum_in_gap(&p, 0.0).unwrap();
    assert!(spectrum.junction_energies().is_empty(), "{:?}", spectrum.states);
    assert!(oracle_roots(&p, 0.0).unwrap().is_empty());
}

#[test]
fn truncated_and_full_line_eigenvalues_agree() {
    let p = toy_problem();
    for &t in &[1.3, 2.9, 4.4] {
        let trunc = edge_spectrum_in_gap(&p, t).unwrap().junction_energies();
        let full = oracle_roots(&p, t).unwrap();
        assert!(!full.is_empty());
        assert_eq!(trunc.len(), full.len(), "t = {t}: {trunc:?} vs {full:?}");
        for (a, b) in trunc.iter().zip(&full) {
            assert!((a - b).abs() < 1e-6, "t = {t}: {a} vs {b}");
        }
    }
}

/// Large coupling, so the decay length and the domain are short.
fn strong_problem() -> EdgeProblem {
    let (v, w) = (TrigPolynomial::cosine(2, 0.5), TrigPolynomial::cosine(1, 10.0));
    EdgeProblem::new(&v, &w, 1, TransitionProfile::Tanh { width: 1.0 }, 1.0).unwrap()
}

/// Enough sine modes to reach wavenumber 40.
fn sine_modes(half_length: f64) -> usize {
    (2.0 * half_length * 40.0 / PI).ceil() as usize
}

#[test]
fn sine_basis_matches_finite_differences() {
    let p = strong_problem();
    assert!(p.half_length < 60.0, "{}", p.half_length);
    let sine = p.clone().with_discretization(Discretization::SineSpectral { modes: sine_modes(p.half_length) });
    for &t in &[1.3, 2.9] {
        let fd = edge_spectrum_in_gap(&p, t).unwrap().junction_energies();
        let sp = edge_spectrum_in_gap(&sine, t).unwrap().junction_energies();
        assert!(!fd.is_empty());
        assert_eq!(fd.len(), sp.len(), "t = {t}: {fd:?} vs {sp:?}");
        for (a, b) in fd.iter().zip(&sp) {
            assert!((a - b).abs() < 1e-6, "t = {t}: {a} vs {b}");
        }
    }
}

#[test]
fn toy_flow_is_minus_one_on_both_backends() {
    let p = toy_problem();
    assert_eq!(spectral_flow(&p, FlowOptions::default()).unwrap().total(), -1);
    let full = p.with_backend(Backend::FullLine);
    let trace = spectral_flow(&full, FlowOptions { samples: 32, ..FlowOptions::default() }).unwrap();
    assert_eq!(trace.total(), -1);
}

#[test]
fn flow_survives_bump_and_wobble() {
    let p = toy_problem().with_bump(Bump { height: 5.0, half_width: 1.0 });
    let opts = FlowOptions { wobble: 0.2, ..FlowOptions::default() };
    assert_eq!(spectral_flow(&p, opts).unwrap().total(), -1);
}
