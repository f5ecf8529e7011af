//! Histogram estimate of the invariant densities of the diagonal example and
//! a heatmap of their sum. The image goes to the directory given as the
//! first argument (default: the system temp directory).

use std::path::PathBuf;

use pdmp_lab::density::{GridGeometry, HeatmapField, Histogram};
use pdmp_lab::model::SwitchingSystem;
use pdmp_lab::rng::SeedSpec;
use pdmp_lab::simulate::{ensemble, EnsembleConfig};

fn main() -> pdmp_lab::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map_or_else(std::env::temp_dir, PathBuf::from);
    let sys = SwitchingSystem::bhlm(2.0, 1.0, 4.0, 4.0)?;
    let grid = GridGeometry::cube(&[-0.25, -0.25], &[1.25, 1.25], 96)?;
    let cfg = EnsembleConfig::with_total_samples(&sys, 8, 2_000_000, SeedSpec::new(2, 0));
    let rho = ensemble(&sys, &cfg, || Histogram::new(grid.clone()))?.finish()?;
    let (m0, m1) = rho.mode_masses();
    println!("{} samples, {} outside the box", rho.samples, rho.clipped);
    println!("mode masses ({m0:.4}, {m1:.4}), stationary {:?}", sys.stationary_modes());
    let peak = rho.total().into_iter().fold(0.0, f64::max);
    println!("largest cell density {peak:.3}");
    let (img, scale) = rho.heatmap(HeatmapField::Total)?;
    let path = out.join("invariant_density.pgm");
    img.write(&mut std::fs::File::create(&path)?)?;
    println!("heatmap scaled to max {:.3} written to {}", scale.max_density, path.display());
    Ok(())
}
