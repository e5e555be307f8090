//! Property checks over randomly drawn potentials, couplings and gauges.

use dislocation::bloch::{assemble_bloch, bands, quasimode_certificate, spectrum};
use dislocation::bulk::{chern_fhs, torus_cutoff, torus_eigenframe};
use dislocation::coupling::{sample_curve, winding_number, CouplingSeries};
use dislocation::potential::TrigPolynomial;
use dislocation::scenarios::toy;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

/// Real trigonometric polynomial with the given coefficients at frequencies `1..=len`.
fn real_poly(coeffs: &[(f64, f64)]) -> TrigPolynomial {
    let pairs: Vec<(i64, Complex64)> = coeffs
        .iter()
        .enumerate()
        .flat_map(|(k, &(re, im))| {
            let f = k as i64 + 1;
            [(f, Complex64::new(re, im)), (-f, Complex64::new(re, -im))]
        })
        .collect();
    TrigPolynomial::from_pairs(&pairs).unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..4)
}

fn sup_norm(p: &TrigPolynomial) -> f64 {
    (0..2000).map(|i| p.eval(i as f64 / 2000.0).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bands_are_symmetric_about_pi(c in coeffs(), xi in 0.0f64..PI) {
        let p = real_poly(&c);
        let a = bands(&p, xi, 5).unwrap();
        let b = bands(&p, 2.0 * PI - xi, 5).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn bands_move_by_at_most_the_sup_norm(c in coeffs(), d in coeffs(), xi in 0.0f64..2.0 * PI, s in 0.0f64..0.3) {
        let p = real_poly(&c);
        let q = p.add(&real_poly(&d).scale(s));
        let bound = sup_norm(&q.add(&p.scale(-1.0))) * (1.0 + 1e-6);
        let a = bands(&p, xi, 5).unwrap();
        let b = bands(&q, xi, 5).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= bound + 1e-9, "{x} vs {y}, bound {bound}");
        }
    }

    #[test]
    fn low_bands_converge_in_the_cutoff(c in coeffs(), xi in 0.0f64..2.0 * PI) {
        let p = real_poly(&c);
        let k = p.bandwidth() + 8;
        let count = 2 * p.bandwidth();
        let coarse = spectrum(&assemble_bloch(&p, xi, k).unwrap(), count).unwrap().eigenvalues;
        let fine = spectrum(&assemble_bloch(&p, xi, k + 8).unwrap(), count).unwrap().eigenvalues;
        for (x, y) in coarse.iter().zip(&fine) {
            prop_assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn translation_shifts_the_argument(c in coeffs(), t in -7.0f64..7.0, x in 0.0f64..1.0) {
        let p = real_poly(&c);
        prop_assert!((p.translate(t).eval(x) - p.eval(x + t / (2.0 * PI))).abs() < 1e-12);
    }

    #[test]
    fn random_trial_vectors_satisfy_the_quasimode_bound(
        c in coeffs(),
        xi in 0.0f64..2.0 * PI,
        e in -20.0f64..400.0,
        entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 27),
    ) {
        let op = assemble_bloch(&real_poly(&c), xi, 13).unwrap();
        let psi = DVector::from_iterator(27, entries.iter().map(|&(a, b)| Complex64::new(a, b)));
        prop_assume!(psi.norm() > 1e-6);
        prop_assert!(quasimode_certificate(&op, &psi, e).unwrap().holds);
    }

    #[test]
    fn odd_monomial_couplings_wind_by_their_exponent(k in -4i64..=3, phase in 0.0f64..2.0 * PI, r in 0.1f64..5.0) {
        let m = 2 * k + 1;
        let series = CouplingSeries { terms: vec![(m, Complex64::from_polar(r, phase)), (0, Complex64::new(0.05 * r, 0.0))] };
        let samples = sample_curve(&series).unwrap();
        prop_assert_eq!(winding_number(&samples).unwrap(), m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lattice_chern_number_is_gauge_invariant(phases in prop::collection::vec(0.0f64..2.0 * PI, 144)) {
        let sc = toy();
        let field = torus_eigenframe(&sc.v, &sc.w, 1.0, 1, 12, 12, torus_cutoff(&sc.v, &sc.w, 1)).unwrap();
        let plain = chern_fhs(&field).unwrap();
        let gauged = chern_fhs(&field.regauge(|i, j| DMatrix::from_element(1, 1, Complex64::from_polar(1.0, phases[12 * i + j])))).unwrap();
        prop_assert_eq!(plain.c1, gauged.c1);
        prop_assert!((plain.raw - gauged.raw).abs() < 1e-10);
        prop_assert_eq!(chern_fhs(&field.conjugate()).unwrap().c1, -plain.c1);
    }
}
