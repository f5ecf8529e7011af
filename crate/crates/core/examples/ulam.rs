//! Ulam discretisation of the induced chain against a long chain run.

use pdmp_lab::density::{compare_densities, GridGeometry, Histogram};
use pdmp_lab::model::SwitchingSystem;
use pdmp_lab::rng::SeedSpec;
use pdmp_lab::simulate::chain_ensemble;
use pdmp_lab::ulam::{ulam_invariant, UlamOptions};

fn main() -> pdmp_lab::Result<()> {
    let sys = SwitchingSystem::bhlm(2.0, 1.0, 10.0, 10.0)?;
    let alpha = 40.0;
    let grid = GridGeometry::cube(&[-0.25, -0.25], &[1.25, 1.25], 48)?;
    let opts = UlamOptions {
        steps_per_transition: 20,
        ..UlamOptions::new(400, SeedSpec::new(7, 0))
    };
    let ul = ulam_invariant(&sys, alpha, &grid, &opts)?;
    println!("{} sweeps, residual {:.1e}, leaked {:.1e}", ul.sweeps, ul.residual, ul.leaked);
    println!("mode masses {:?}, stationary {:?}", ul.big_pi.mode_masses(), sys.stationary_modes());
    let mc = chain_ensemble(&sys, alpha, 8, 250_000, 2000, SeedSpec::new(8, 0), || Histogram::new(grid.clone()))?
        .finish()?;
    println!("L1 distance to the chain histogram: {:.4}", compare_densities(&ul.pi, &mc)?);
    Ok(())
}
