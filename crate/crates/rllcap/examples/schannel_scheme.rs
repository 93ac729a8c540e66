//! Runs the zero-error scheme for channels that never corrupt a 1 into a 0.
//!
//! When β = 0 the decoder can wait for the first 0 it observes: the number
//! of channel uses consumed reveals the transmitted bit exactly. Encoding
//! message indices as constant-weight words tuned to the optimal
//! ones-fraction drives the empirical rate toward capacity as the block
//! length grows, with zero decoding errors at any noise level.

use rllcap::channel::ChannelParams;
use rllcap::schannel::{optimal_shaping, run_schannel_scheme};

fn main() -> Result<(), rllcap::Error> {
    let alpha = 0.2;
    let capacity = optimal_shaping(alpha)?;
    println!(
        "alpha = {alpha}: capacity {:.6} bits/use at ones-fraction {:.6}",
        capacity.rate, capacity.z_opt
    );

    println!(
        "\n{:>6} {:>8} {:>8} {:>12} {:>12} {:>10}",
        "block", "weight", "errors", "mean rate", "fraction", "E[uses]"
    );
    for block_len in [12, 24, 48, 64] {
        let summary = run_schannel_scheme(&ChannelParams::s_channel(alpha)?, block_len, 2000, 5)?;
        println!(
            "{block_len:>6} {:>8} {:>8} {:>12.6} {:>12.4} {:>10.2}",
            summary.weight,
            summary.errors,
            summary.mean_rate,
            summary.mean_rate / capacity.rate,
            summary.mean_uses
        );
    }
    println!(
        "\nevery trial decodes exactly; the rate climbs toward capacity with the block length"
    );
    Ok(())
}
