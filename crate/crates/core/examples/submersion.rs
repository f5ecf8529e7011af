//! The submersion determinant: its mixed derivative at the origin against
//! the Krylov determinant, and its size at random offsets.

use pdmp_lab::model::SwitchingSystem;
use pdmp_lab::rng::SeedSpec;
use pdmp_lab::theory::{submersion_anchor, submersion_scan, DEFAULT_FD_ACCURACY, DEFAULT_FD_STEP};

fn main() -> pdmp_lab::Result<()> {
    let systems = [
        ("malrieu", SwitchingSystem::malrieu(1.0, 1.0)?),
        ("bhlm", SwitchingSystem::bhlm(2.0, 1.0, 1.0, 1.0)?),
        ("vandermonde3", SwitchingSystem::vandermonde(&[3.0, 2.0, 1.0], 1.0, 1.0)?),
    ];
    for (name, sys) in &systems {
        let anchor = submersion_anchor(sys.a(), sys.p(), DEFAULT_FD_STEP, DEFAULT_FD_ACCURACY)?;
        let scan = submersion_scan(sys, 1000, 1.0, 1e-12, SeedSpec::new(6, 0))?;
        println!(
            "{name:<13} stencil {:+.10} direct {:+.10} rel {:.1e} ({} evaluations); min |f| {:.2e}",
            anchor.finite_difference, anchor.direct, anchor.rel_error, anchor.evaluations, scan.min_abs
        );
    }
    Ok(())
}
