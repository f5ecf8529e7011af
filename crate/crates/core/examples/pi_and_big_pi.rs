//! The chain law `π` recovered from the process law `Π` through one
//! switching step, compared with a direct chain histogram.

use pdmp_lab::density::{compare_densities, pi_from_big_pi, GridGeometry, Histogram};
use pdmp_lab::model::SwitchingSystem;
use pdmp_lab::rng::SeedSpec;
use pdmp_lab::simulate::{chain_ensemble, ensemble, EnsembleConfig};
use pdmp_lab::theory::u_matrix;

fn main() -> pdmp_lab::Result<()> {
    let sys = SwitchingSystem::bhlm(2.0, 1.0, 10.0, 10.0)?;
    let alpha = 40.0;
    let grid = GridGeometry::cube(&[-0.25, -0.25], &[1.25, 1.25], 64)?;
    let total = 2_000_000;
    let cfg = EnsembleConfig::with_total_samples(&sys, 8, total, SeedSpec::new(9, 0));
    let big_pi = ensemble(&sys, &cfg, || Histogram::new(grid.clone()))?.finish()?;
    let pi = chain_ensemble(&sys, alpha, 8, total / 8, 2000, SeedSpec::new(10, 0), || Histogram::new(grid.clone()))?
        .finish()?;
    let u = u_matrix(&sys, alpha)?;
    println!("U = {u:?}");
    println!("L1(Π, π) = {:.4}", compare_densities(&big_pi, &pi)?);
    println!("L1(Π U, π) = {:.4}", compare_densities(&pi_from_big_pi(&big_pi, &u)?, &pi)?);
    Ok(())
}
