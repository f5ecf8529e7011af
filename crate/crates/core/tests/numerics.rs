//! Slower consistency checks between independent estimators.

use pdmp_lab::density::{compare_densities, GridGeometry, Histogram};
use pdmp_lab::model::SwitchingSystem;
use pdmp_lab::reach::{compute_gamma, default_gamma_box, mass_outside, support_match, GammaOptions};
use pdmp_lab::rng::SeedSpec;
use pdmp_lab::simulate::{chain_ensemble, ensemble, EnsembleConfig};
use pdmp_lab::ulam::{ulam_invariant, UlamOptions};

#[test]
fn gamma_matches_the_histogram_support() {
    let sys = SwitchingSystem::malrieu(5.0, 5.0).unwrap();
    let (lo, hi) = default_gamma_box("malrieu").unwrap();
    let g = GridGeometry::cube(&lo, &hi, 256).unwrap();
    let gamma = compute_gamma(&sys, &g, &GammaOptions::default()).unwrap().region;
    let cfg = EnsembleConfig::with_total_samples(&sys, 8, 10_000_000, SeedSpec::new(1, 0));
    let grid = ensemble(&sys, &cfg, || Histogram::new(g.clone())).unwrap().finish().unwrap();
    // no sample lands outside the computed set
    assert_eq!(mass_outside(&gamma, &grid, 0).unwrap(), 0.0);
    let score = support_match(&gamma, &grid, 0.0, 2).unwrap();
    assert!(score > 0.70, "support match {score}");
}

#[test]
fn ulam_improves_with_resolution() {
    let sys = SwitchingSystem::bhlm(2.0, 1.0, 10.0, 10.0).unwrap();
    let alpha = 40.0;
    let mut errors = Vec::new();
    for n in [32, 64] {
        let g = GridGeometry::cube(&[-0.25, -0.25], &[1.25, 1.25], n).unwrap();
        let opts = UlamOptions {
            steps_per_transition: 20,
            ..UlamOptions::new(1000, SeedSpec::new(2, 0))
        };
        let ul = ulam_invariant(&sys, alpha, &g, &opts).unwrap();
        let mc = chain_ensemble(&sys, alpha, 8, 1_250_000, 2000, SeedSpec::new(3, 0), || Histogram::new(g.clone()))
            .unwrap()
            .finish()
            .unwrap();
        errors.push(compare_densities(&ul.pi, &mc).unwrap());
    }
    assert!(errors[1] <= errors[0] + 0.02, "{errors:?}");
}
