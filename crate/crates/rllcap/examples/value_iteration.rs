//! Solves the capacity dynamic program numerically and checks the answer.
//!
//! Relative value iteration on a discretized belief state converges to the
//! channel's capacity as its average reward. The closed-form solution of
//! the same Bellman equation gives the exact bias function and the policy
//! "transmit min(z, z₂)"; this example measures how fast the numerical
//! solution approaches it as the grid refines.

use rllcap::channel::ChannelParams;
use rllcap::dp::{bellman_residual, value_iteration, BellmanClosedForm};

fn main() -> Result<(), rllcap::Error> {
    let params = ChannelParams::new(0.25, 0.25)?;
    let closed = BellmanClosedForm::new(&params)?;
    println!("closed-form capacity = {:.12} bits/use", closed.rho());
    println!("threshold action z2  = {:.12}", closed.z2());

    println!("\n{:>8} {:>18} {:>12}", "grid", "rho (iterated)", "gap");
    for grid in [250, 500, 1000, 2000] {
        let vf = value_iteration(&params, grid, 20_000, 1e-10)?;
        println!(
            "{grid:>8} {:>18.12} {:>12.3e}",
            vf.rho,
            (vf.rho - closed.rho()).abs()
        );
    }

    let report = bellman_residual(&params, 10_000)?;
    println!(
        "\nclosed form under the Bellman operator on {} states: max residual {:.3e}, {} action mismatches",
        report.grid_size, report.max_residual, report.action_mismatches
    );
    Ok(())
}
