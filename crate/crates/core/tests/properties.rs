use num_complex::Complex64 as C64;
use proptest::prelude::*;

use dqsqueeze::dq::{build_dq, to_fock, CMConfig, DQState};
use dqsqueeze::fock::{annihilation_matrix, DensityMatrix, Truncation};
use dqsqueeze::imperfections::{realized_state, ImperfectionParams};
use dqsqueeze::nongauss::{hsd, hsd_dq, wigner_closed, wigner_oracle_pure};
use dqsqueeze::squeezing::quadratures;

fn qudit() -> impl Strategy<Value = DQState> {
    (
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..5),
        -2.0f64..2.0,
        -2.0f64..2.0,
    )
        .prop_filter_map("non-zero", |(c, dr, di)| {
            let coeffs: Vec<C64> = c.into_iter().map(|(re, im)| C64::new(re, im)).collect();
            DQState::new(C64::new(dr, di), coeffs).ok()
        })
}

fn heralded() -> impl Strategy<Value = (usize, usize, f64, f64)> {
    (0usize..=3, 0usize..=4, 0.2f64..7.0, 0.1f64..0.9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn displacement_leaves_variances(s in qudit(), br in -3.0f64..3.0, bi in -3.0f64..3.0) {
        let q = quadratures(&s);
        let moved = quadratures(&s.displaced_by(C64::new(br, bi)));
        prop_assert!((q.var_x - moved.var_x).abs() < 1e-10);
        prop_assert!((q.var_p - moved.var_p).abs() < 1e-10);
    }

    #[test]
    fn heisenberg_bound(s in qudit()) {
        prop_assert!(quadratures(&s).uncertainty_product() >= 0.25 - 1e-9);
    }

    #[test]
    fn fock_expansion_is_normalized((n, m, a2, r) in heralded()) {
        let cfg = CMConfig::from_alpha_sq(n, m, a2, r).unwrap();
        let (s, _) = build_dq(&cfg).unwrap();
        let psi = to_fock(&s, Truncation::heuristic(n, m, a2)).unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mean_field_matches_dense((n, m, a2, r) in heralded()) {
        let cfg = CMConfig::from_alpha_sq(n, m, a2, r).unwrap();
        let (s, _) = build_dq(&cfg).unwrap();
        let t = Truncation::heuristic(n, m, a2);
        let rho = DensityMatrix::pure(&to_fock(&s, t).unwrap());
        let a = rho.expect(&annihilation_matrix(t)).unwrap();
        let q = quadratures(&s);
        prop_assert!((q.mean_x - std::f64::consts::SQRT_2 * a.re).abs() < 1e-8);
    }

    #[test]
    fn wigner_closed_form_matches_parity(
        (n, m, a2, r) in heralded(),
        x in -2.5f64..2.5,
        p in -2.5f64..2.5,
    ) {
        let cfg = CMConfig::from_alpha_sq(n, m, a2, r).unwrap();
        let (s, _) = build_dq(&cfg).unwrap();
        let beta = s.displacement() + C64::new(x, p);
        let psi = to_fock(&s, Truncation::heuristic(n, m, a2).padded(20)).unwrap();
        let dense = wigner_oracle_pure(&psi, beta).unwrap();
        prop_assert!((wigner_closed(&s, beta) - dense).abs() < 1e-8);
    }

    #[test]
    fn fast_hsd_matches_dense((n, m, a2, r) in (0usize..=2, 0usize..=3, 0.2f64..4.0, 0.2f64..0.8)) {
        let cfg = CMConfig::from_alpha_sq(n, m, a2, r).unwrap();
        let (s, _) = build_dq(&cfg).unwrap();
        let fast = hsd_dq(&s).unwrap();
        let rho = DensityMatrix::pure(&to_fock(&s, Truncation::heuristic(n, m, a2)).unwrap());
        let dense = hsd(&rho).unwrap();
        prop_assert!((fast - dense).abs() < 1e-7, "{} vs {}", fast, dense);
        prop_assert!((0.0..=0.5 + 1e-6).contains(&fast));
    }

    #[test]
    fn realized_state_is_physical(
        (n, a2, r) in (1usize..=3, 0.5f64..6.0, 0.2f64..0.9),
        eta_d in 0.3f64..=1.0,
        eta_s in 0.0f64..=1.0,
    ) {
        let cfg = CMConfig::from_alpha_sq(n, 1, a2, r).unwrap();
        let imp = ImperfectionParams::new(eta_d, eta_s).unwrap();
        let (rho, p) = realized_state(&cfg, imp, Truncation::heuristic(n, 1, a2)).unwrap();
        prop_assert!(p > 0.0 && p <= 1.0);
        prop_assert!(rho.hermiticity_error() < 1e-12);
        prop_assert!(rho.min_eigenvalue() > -1e-10);
        prop_assert!((rho.trace() - 1.0).abs() < 1e-10);
    }
}
