//! Simulates the posterior-matching scheme across block lengths.
//!
//! The encoder tracks the decoder's posterior over messages through the
//! common feedback, matches each transmitted bit to the optimal input
//! distribution at the current graph node, and finishes with a short
//! confirmation phase that tells the decoder which high-posterior candidate
//! is the true one. Error probability falls as the block length grows while
//! the message count is held fixed.

use rllcap::channel::ChannelParams;
use rllcap::pms::run_pms_batch;

fn main() -> Result<(), rllcap::Error> {
    let params = ChannelParams::new(0.25, 0.25)?;
    let messages = 16;
    let trials = 200;

    println!("channel (0.25, 0.25), {messages} messages, {trials} trials per block length");
    println!(
        "{:>6} {:>8} {:>10} {:>10} {:>12} {:>12}",
        "n", "errors", "error rate", "unlisted", "mass drift", "partition"
    );
    for horizon in [100, 200, 400, 800] {
        let batch = run_pms_batch(&params, messages, horizon, trials, 12)?;
        println!(
            "{horizon:>6} {:>8} {:>10.3} {:>10} {:>12.2e} {:>12.2e}",
            batch.errors,
            batch.error_rate,
            batch.unlisted,
            batch.max_mass_drift,
            batch.max_partition_gap
        );
        assert!(
            batch.all_rll_ok,
            "every transmitted block obeys the input constraint"
        );
        assert!(
            batch.all_length_bounds_ok,
            "posterior masses stay above the shrink bound"
        );
    }
    Ok(())
}
