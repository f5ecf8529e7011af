//! A quadratic norm in which a non-normal stable matrix contracts at a rate
//! close to its spectral abscissa, where the Euclidean norm fails.

use pdmp_lab::linalg::{spectrum, SquareMatrix};
use pdmp_lab::model::SwitchingSystem;
use pdmp_lab::norm::{AdaptedNorm, StateSpace};
use pdmp_lab::rng::SeedSpec;

fn main() -> pdmp_lab::Result<()> {
    let a = SquareMatrix::from_rows(&[vec![-1.0, 10.0], vec![0.0, -1.0]])?;
    let sym = (a.as_matrix() + a.as_matrix().transpose()) * 0.5;
    println!("spectral abscissa {}", spectrum(&a)?.lambda_max());
    println!("largest eigenvalue of the symmetric part {}", sym.symmetric_eigenvalues().max());
    for eps in [1.0, 0.5, 0.25, 0.1] {
        let norm = AdaptedNorm::for_matrix(&a, eps)?;
        println!(
            "eps {eps:<4}: min slack {:+.3e}, Lyapunov residual {:.1e}",
            norm.min_sampled_slack(&a, 10_000, SeedSpec::new(11, 0)),
            norm.lyapunov_residual(&a)?
        );
    }
    let sys = SwitchingSystem::malrieu(1.0, 1.0)?;
    let m = StateSpace::for_system(&sys)?;
    println!(
        "rotating example: state space radius {:.3}, half-widths {:?}, boundary derivative {:.3e}",
        m.radius,
        m.half_widths(),
        m.max_boundary_derivative(&sys, 1000, SeedSpec::new(12, 0))
    );
    Ok(())
}
