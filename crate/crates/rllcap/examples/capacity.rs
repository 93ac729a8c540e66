//! Computes the feedback capacity of one channel three independent ways.
//!
//! The closed-form maximization, the root-finding characterization, and the
//! stationary graph policy's conditional mutual information all answer the
//! same question; this example prints them side by side for a handful of
//! channels, including the noiseless case whose capacity is log₂ of the
//! golden ratio.

use rllcap::analytic::{capacity_by_maximization, capacity_by_root, golden_ratio};
use rllcap::channel::ChannelParams;
use rllcap::qgraph::{build_policy, conditional_mutual_information};

fn main() -> Result<(), rllcap::Error> {
    println!(
        "{:>6} {:>6} {:>18} {:>18} {:>18}",
        "alpha", "beta", "maximization", "root form", "graph policy"
    );
    for (alpha, beta) in [(0.0, 0.0), (0.25, 0.25), (0.1, 0.3), (0.0, 0.5), (0.4, 0.0)] {
        let params = ChannelParams::new(alpha, beta)?;
        let max = capacity_by_maximization(&params);
        let root = match capacity_by_root(&params) {
            Ok(r) => format!("{:.15}", r.capacity),
            Err(_) => "(singular)".to_string(),
        };
        let graph = conditional_mutual_information(&build_policy(&params)?);
        println!(
            "{alpha:>6} {beta:>6} {:>18.15} {root:>18} {graph:>18.15}",
            max.capacity
        );
    }
    println!();
    println!(
        "noiseless capacity equals log2(golden ratio) = {:.15}",
        golden_ratio().log2()
    );
    Ok(())
}
