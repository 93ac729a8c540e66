//! Inspects the capacity-achieving stationary policy on its four-node graph.
//!
//! The optimal input distribution depends on the past only through a
//! four-valued statistic of the output sequence. This example prints the
//! node transition table, the per-node input distributions z_q, the
//! stationary node occupancy, and the smallest positive posterior mass
//! S_min that calibrates the transmission scheme's list threshold.

use rllcap::channel::ChannelParams;
use rllcap::qgraph::{
    build_policy, conditional_mutual_information, next_node, stationary_check, NODES,
};

fn main() -> Result<(), rllcap::Error> {
    let params = ChannelParams::new(0.25, 0.25)?;
    let policy = build_policy(&params)?;

    println!("node transitions g(q, y):");
    for q in NODES {
        println!(
            "  q = {q}: y=0 -> {}, y=1 -> {}",
            next_node(q, 0),
            next_node(q, 1)
        );
    }

    println!("\nper-node probability that the next input is 0 given X_prev = 0:");
    for (i, q) in NODES.iter().enumerate() {
        println!("  z_{q} = {:.12}", policy.z[i]);
    }

    let pi = policy.chain_stationary();
    println!("\nstationary occupancy of (node, previous input):");
    for (i, q) in NODES.iter().enumerate() {
        println!(
            "  q = {q}: x_prev = 0 -> {:.9}, x_prev = 1 -> {:.9}",
            pi[2 * i],
            pi[2 * i + 1]
        );
    }
    println!("stationarity residual = {:.3e}", stationary_check(&policy));

    println!("\nS_min = {:.12}", policy.s_min());
    println!(
        "I(X; Y | Q) = {:.12} bits/use (the channel's feedback capacity)",
        conditional_mutual_information(&policy)
    );
    Ok(())
}
