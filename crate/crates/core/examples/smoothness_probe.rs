//! Sup-density of the diagonal example near the origin under grid
//! refinement, below and above the regularity threshold.

use nalgebra::DVector;
use pdmp_lab::density::{default_probe_levels, smoothness_probe, ProbeThresholds};
use pdmp_lab::model::SwitchingSystem;
use pdmp_lab::rng::SeedSpec;
use pdmp_lab::simulate::EnsembleConfig;

fn main() -> pdmp_lab::Result<()> {
    let levels = default_probe_levels();
    for rate in [0.5, 10.0] {
        let sys = SwitchingSystem::bhlm(2.0, 1.0, rate, rate)?;
        let cfg = EnsembleConfig::with_total_samples(&sys, 8, 4_000_000, SeedSpec::new(4, 0));
        let probe = smoothness_probe(&sys, &DVector::zeros(2), &levels, &cfg, ProbeThresholds::default())?;
        println!("rates {rate}: {:?} ({} samples in the window)", probe.verdict, probe.samples_in_window);
        for level in &probe.levels {
            let growth = level.growth_per_halving.map_or("-".to_string(), |g| format!("{g:.2}"));
            println!("  h = {:<9.6} sup = {:<10.3} growth {growth}", level.h, level.sup_density);
        }
    }
    Ok(())
}
