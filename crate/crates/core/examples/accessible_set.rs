//! Grid approximation of the accessible set of the rotating example, its
//! stability under the choice of seed and its agreement with a histogram.

use std::path::PathBuf;

use pdmp_lab::density::{GridGeometry, Histogram};
use pdmp_lab::model::SwitchingSystem;
use pdmp_lab::reach::{compute_gamma, default_gamma_box, mass_outside, GammaOptions, GammaSeed};
use pdmp_lab::rng::SeedSpec;
use pdmp_lab::simulate::{ensemble, EnsembleConfig};

fn main() -> pdmp_lab::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map_or_else(std::env::temp_dir, PathBuf::from);
    let sys = SwitchingSystem::malrieu(5.0, 5.0)?;
    let (lo, hi) = default_gamma_box("malrieu").expect("built-in box");
    let grid = GridGeometry::cube(&lo, &hi, 256)?;
    let gamma = compute_gamma(&sys, &grid, &GammaOptions::default())?;
    println!(
        "{} cells marked with step {:.4} in {} sweeps, connected: {}",
        gamma.stats.marked_cells,
        gamma.stats.step,
        gamma.stats.sweeps,
        gamma.region.is_connected()
    );
    let from_p = compute_gamma(
        &sys,
        &grid,
        &GammaOptions {
            seed: GammaSeed::P,
            ..GammaOptions::default()
        },
    )?;
    println!("Jaccard(origin seed, p seed) = {:.4}", gamma.region.jaccard(&from_p.region)?);

    let cfg = EnsembleConfig::with_total_samples(&sys, 8, 1_000_000, SeedSpec::new(3, 0));
    let rho = ensemble(&sys, &cfg, || Histogram::new(grid.clone()))?.finish()?;
    println!("histogram mass outside the set: {:.2e}", mass_outside(&gamma.region, &rho, 0)?);

    let path = out.join("accessible_set.pgm");
    gamma.region.to_pgm()?.write(&mut std::fs::File::create(&path)?)?;
    println!("mask written to {}", path.display());
    Ok(())
}
