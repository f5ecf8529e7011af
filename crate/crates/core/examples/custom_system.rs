//! A user-defined degenerate system: `p` spans only part of the space, so
//! paths are attracted to the Krylov subspace `H` and the restricted system
//! is the one to analyse.

use nalgebra::DVector;
use pdmp_lab::linalg::SquareMatrix;
use pdmp_lab::model::{make_system, Mode};
use pdmp_lab::rng::SeedSpec;
use pdmp_lab::simulate::simulate_pdmp;

fn main() -> pdmp_lab::Result<()> {
    let a = SquareMatrix::diag(&[-2.0, -1.0, -0.5])?;
    let sys = make_system(a, DVector::from_vec(vec![1.0, 1.0, 0.0]), 2.0, 2.0)?;
    println!(
        "dim H = {}, nondegenerate: {}, Krylov margin {:.2e}",
        sys.krylov().dimension(),
        sys.is_nondegenerate(),
        sys.independence().margin
    );
    let x0 = DVector::from_vec(vec![0.5, -0.5, 2.0]);
    let d0 = sys.project_h(&x0).1;
    let traj = simulate_pdmp(&sys, &x0, Mode::Zero, 10.0, SeedSpec::new(13, 0))?;
    for t in [0.0, 1.0, 2.0, 5.0, 10.0] {
        let (x, _) = traj.sample_position(&sys, t)?;
        println!("t = {t:>4}: dist to H {:.6e}, predicted {:.6e}", sys.project_h(&x).1, d0 * (-0.5 * t).exp());
    }
    let restricted = sys.restrict_to_h()?;
    println!(
        "restricted system: dim {}, nondegenerate {}, spectrum {:?}",
        restricted.dim(),
        restricted.is_nondegenerate(),
        restricted.spectrum()
    );
    Ok(())
}
