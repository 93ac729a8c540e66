//! Capacity along the three classical one-parameter families.
//!
//! The symmetric channel (α = β), the Z-channel (α = 0), and the S-channel
//! (β = 0) each have their own specialized closed form. This example sweeps
//! all three and confirms that the general two-parameter formula reproduces
//! them exactly.

use rllcap::analytic::{
    bsc_capacity, capacity_by_maximization, s_channel_capacity, z_channel_capacity,
};
use rllcap::channel::ChannelParams;

fn main() -> Result<(), rllcap::Error> {
    let steps = 8;
    println!(
        "{:>8} {:>8} {:>8} {:>16} {:>16} {:>10}",
        "family", "alpha", "beta", "closed form", "general", "gap"
    );
    for i in 0..=steps {
        let a = 0.5 * i as f64 / steps as f64;
        row("bsc", a, a, bsc_capacity(a)?.capacity)?;
    }
    for i in 0..steps {
        let b = i as f64 / steps as f64;
        row("z", 0.0, b, z_channel_capacity(b)?.capacity)?;
    }
    for i in 0..steps {
        let a = i as f64 / steps as f64;
        row("s", a, 0.0, s_channel_capacity(a)?.capacity)?;
    }
    Ok(())
}

fn row(family: &str, alpha: f64, beta: f64, specialized: f64) -> Result<(), rllcap::Error> {
    let general = capacity_by_maximization(&ChannelParams::new(alpha, beta)?).capacity;
    println!(
        "{family:>8} {alpha:>8.4} {beta:>8.4} {specialized:>16.12} {general:>16.12} {:>10.2e}",
        (specialized - general).abs()
    );
    Ok(())
}
