//! Smallest switching rate that guarantees `C^r` densities, for a range of
//! rates and smoothness orders.

use pdmp_lab::model::SwitchingSystem;
use pdmp_lab::theory::regularity_threshold;

fn main() -> pdmp_lab::Result<()> {
    for rate in [0.5, 2.0, 4.0, 10.0] {
        let sys = SwitchingSystem::bhlm(2.0, 1.0, rate, rate)?;
        let rows: Vec<String> = (0..4)
            .map(|r| {
                let rep = regularity_threshold(&sys, r);
                format!("r={r}: {} > {} {}", rep.min_rate, rep.bound, if rep.satisfied { "yes" } else { "no" })
            })
            .collect();
        let r_max = regularity_threshold(&sys, 0).r_max;
        println!("rates {rate:>4}: {} | largest r {r_max:?}", rows.join(", "));
    }
    Ok(())
}
