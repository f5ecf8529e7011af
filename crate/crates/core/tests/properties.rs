use nalgebra::DVector;
use proptest::prelude::*;

use pdmp_lab::density::{pi_from_big_pi, GridGeometry, Histogram};
use pdmp_lab::linalg::SquareMatrix;
use pdmp_lab::model::{make_system, Mode, SwitchingSystem};
use pdmp_lab::norm::{AdaptedNorm, StateSpace};
use pdmp_lab::reach::{compute_gamma, GammaOptions};
use pdmp_lab::rng::SeedSpec;
use pdmp_lab::simulate::{ensemble, simulate_pdmp, EnsembleConfig};
use pdmp_lab::theory::{
    qdelta_search, regularity_threshold, switch_count, switch_tail_exact, tail_bound, u_matrix, DEFAULT_ETA,
};

fn stable_2x2() -> impl Strategy<Value = SquareMatrix> {
    // lower-triangular part plus a negative diagonal keeps A Hurwitz
    (0.2f64..3.0, 0.2f64..3.0, -5.0f64..5.0).prop_map(|(a, b, c)| {
        SquareMatrix::from_rows(&[vec![-a, c], vec![0.0, -b]]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn threshold_is_monotone_in_r(l2 in 0.5f64..4.0, gap in 0.05f64..3.0, rate in 0.1f64..30.0) {
        let sys = SwitchingSystem::bhlm(l2 + gap, l2, rate, rate).unwrap();
        let mut prev = regularity_threshold(&sys, 0);
        for r in 1..6 {
            let rep = regularity_threshold(&sys, r);
            prop_assert!(rep.bound > prev.bound);
            prop_assert!(!rep.satisfied || prev.satisfied);
            prop_assert_eq!(rep.r_max, prev.r_max);
            prev = rep;
        }
    }

    #[test]
    fn u_matrix_is_stochastic(a01 in 0.1f64..20.0, a10 in 0.1f64..20.0, extra in 0.0f64..50.0) {
        let sys = SwitchingSystem::malrieu(a01, a10).unwrap();
        let u = u_matrix(&sys, sys.max_rate() + extra).unwrap();
        for row in u {
            prop_assert!((row[0] + row[1] - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn tail_bound_dominates_exact_tail(
        s0 in 0.05f64..0.95,
        s1 in 0.05f64..0.95,
        d in 1usize..5,
        extra in 0usize..30,
        frac in 0.01f64..0.99,
    ) {
        let u = [[s0, 1.0 - s0], [1.0 - s1, s1]];
        let n = d + 1 + extra;
        let z = 1.0 + (1.0 / s0.max(s1) - 1.0) * frac;
        let bound = tail_bound(&u, d, n, z).unwrap();
        let exact = switch_tail_exact(&u, d, n);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&exact));
        prop_assert!(bound >= exact * (1.0 - 1e-12), "bound {bound} < exact {exact}");
    }

    #[test]
    fn switch_count_counts_changes(seq in prop::collection::vec(0u8..2, 1..40)) {
        let want = seq.windows(2).filter(|w| w[0] != w[1]).count();
        prop_assert_eq!(switch_count(&seq).unwrap(), want);
    }

    #[test]
    fn certificates_reverify(l1 in 1.0f64..3.0, l2 in 0.5f64..1.0, rate in 6.0f64..30.0) {
        let sys = SwitchingSystem::bhlm(l1, l2, rate, rate).unwrap();
        if let Ok(cert) = qdelta_search(&sys, 0, DEFAULT_ETA) {
            prop_assert!(cert.verify(&sys).unwrap());
            prop_assert!(cert.n > cert.d);
            prop_assert!(cert.contraction_base < 1.0);
        }
    }

    #[test]
    fn adapted_norm_inequality_holds(a in stable_2x2(), eps in 0.05f64..1.0) {
        let norm = AdaptedNorm::for_matrix(&a, eps).unwrap();
        prop_assert!(norm.min_sampled_slack(&a, 500, SeedSpec::new(5, 0)) >= -1e-9);
        prop_assert!(norm.lyapunov_residual(&a).unwrap() < 1e-8);
    }

    #[test]
    fn flows_compose(a in stable_2x2(), s in 0.0f64..2.0, t in 0.0f64..2.0, x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let sys = make_system(a, DVector::from_vec(vec![1.0, -0.5]), 1.0, 1.0).unwrap();
        let x0 = DVector::from_vec(vec![x, y]);
        for mode in [Mode::Zero, Mode::One] {
            let two = sys.flow(mode, t, &sys.flow(mode, s, &x0).unwrap()).unwrap();
            let one = sys.flow(mode, s + t, &x0).unwrap();
            prop_assert!((two - one).amax() < 1e-10);
            let mut fast = x0.as_slice().to_vec();
            let mut scratch = vec![0.0; 2];
            sys.flow_in_place(mode, s, &mut fast, &mut scratch);
            prop_assert!((DVector::from_vec(fast) - sys.flow(mode, s, &x0).unwrap()).amax() < 1e-10);
        }
    }

    #[test]
    fn trajectories_are_consistent(a01 in 0.2f64..10.0, a10 in 0.2f64..10.0, seed in 0u64..1000) {
        let sys = SwitchingSystem::malrieu(a01, a10).unwrap();
        let traj = simulate_pdmp(&sys, &DVector::zeros(2), Mode::Zero, 10.0, SeedSpec::new(seed, 0)).unwrap();
        prop_assert!(traj.events.windows(2).all(|w| w[0].t < w[1].t && w[0].mode != w[1].mode));
        let occ = traj.occupation_one();
        prop_assert!((0.0..=1.0).contains(&occ));
        for e in &traj.events {
            let (x, mode) = traj.sample_position(&sys, e.t).unwrap();
            prop_assert_eq!(mode, e.mode);
            prop_assert!((x - DVector::from_column_slice(&e.x)).amax() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gamma_stays_in_the_state_space(l2 in 0.5f64..2.0, gap in 0.1f64..2.0) {
        let sys = SwitchingSystem::bhlm(l2 + gap, l2, 1.0, 1.0).unwrap();
        let g = GridGeometry::cube(&[-0.25, -0.25], &[1.25, 1.25], 48).unwrap();
        let gamma = compute_gamma(&sys, &g, &GammaOptions::default()).unwrap().region;
        let m = StateSpace::for_system(&sys).unwrap();
        let gram_top = m.gram.symmetric_eigenvalues().max();
        let diag = (g.width(0).powi(2) + g.width(1).powi(2)).sqrt();
        prop_assert!(gamma.count() > 0);
        for (cell, _) in gamma.mask.iter().enumerate().filter(|(_, &on)| on) {
            let c = DVector::from_vec(g.center(cell));
            prop_assert!(m.norm(&c) <= m.radius + gram_top.sqrt() * diag);
            // both flows keep the unit square invariant
            prop_assert!(c.iter().all(|&v| (-diag..=1.0 + diag).contains(&v)));
        }
    }

    #[test]
    fn converting_pi_keeps_mass(rate in 1.0f64..10.0, extra in 0.0f64..20.0) {
        let sys = SwitchingSystem::bhlm(2.0, 1.0, rate, rate).unwrap();
        let g = GridGeometry::cube(&[-0.25, -0.25], &[1.25, 1.25], 16).unwrap();
        let cfg = EnsembleConfig::with_total_samples(&sys, 2, 20_000, SeedSpec::new(3, 0));
        let big = ensemble(&sys, &cfg, || Histogram::new(g.clone())).unwrap().finish().unwrap();
        prop_assert!((big.mass() - 1.0).abs() < 1e-9);
        let pi = pi_from_big_pi(&big, &u_matrix(&sys, sys.max_rate() + extra).unwrap()).unwrap();
        prop_assert!((pi.mass() - 1.0).abs() < 1e-9);
        prop_assert!(pi.rho0.iter().chain(&pi.rho1).all(|&v| v >= 0.0));
    }
}
