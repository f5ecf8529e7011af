//! One path of the switching process for the rotating example, with its
//! jump statistics and the fraction of time spent in each mode.

use nalgebra::DVector;
use pdmp_lab::model::{Mode, SwitchingSystem};
use pdmp_lab::rng::SeedSpec;
use pdmp_lab::simulate::simulate_pdmp;

fn main() -> pdmp_lab::Result<()> {
    let sys = SwitchingSystem::malrieu(1.0, 3.0)?;
    let traj = simulate_pdmp(&sys, &DVector::from_vec(vec![-1.0, 1.0]), Mode::Zero, 200.0, SeedSpec::new(1, 0))?;
    let jumps = traj.jump_times().count();
    println!("{jumps} jumps in t = {}", traj.t_end);
    println!(
        "time in mode 1: {:.3} (stationary {:.3})",
        traj.occupation_one(),
        sys.stationary_modes()[1]
    );
    for t in [0.0, 0.5, 1.0, 5.0, 50.0] {
        let (x, mode) = traj.sample_position(&sys, t)?;
        println!("t = {t:>5}: mode {}, x = ({:+.4}, {:+.4})", mode.index(), x[0], x[1]);
    }
    println!("final state {:?} in mode {}", traj.x_end, traj.i_end.index());
    Ok(())
}
