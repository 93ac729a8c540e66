//! Small-noise expansions of the symmetric channel's capacity.
//!
//! Near α = 0 the feedback capacity behaves like
//! log₂φ + c₁·α·log₂α + c₂·α with c₁ = (2−φ)/(3−φ), while without feedback
//! the α·log₂α coefficient is the strictly larger (2φ+2)/(4φ+3). The gap
//! between the two coefficients is the asymptotic value of feedback on this
//! channel. This example tabulates the exact capacity against both
//! expansions as the noise shrinks.

use rllcap::analytic::{
    bsc_capacity, bsc_feedback_asymptotic, bsc_nonfeedback_asymptotic,
    feedback_alpha_log_coefficient, nonfeedback_alpha_log_coefficient,
};

fn main() -> Result<(), rllcap::Error> {
    println!(
        "feedback alpha*log2(alpha) coefficient    = {:.10}",
        feedback_alpha_log_coefficient()
    );
    println!(
        "nonfeedback alpha*log2(alpha) coefficient = {:.10}",
        nonfeedback_alpha_log_coefficient()
    );
    println!(
        "gap = {:.10} (> 0: feedback helps most where noise is rare)\n",
        nonfeedback_alpha_log_coefficient() - feedback_alpha_log_coefficient()
    );

    println!(
        "{:>10} {:>16} {:>16} {:>12} {:>16}",
        "alpha", "exact", "feedback exp.", "residual", "nonfeedback exp."
    );
    for alpha in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5] {
        let exact = bsc_capacity(alpha)?.capacity;
        let fb = bsc_feedback_asymptotic(alpha);
        println!(
            "{alpha:>10.0e} {exact:>16.12} {fb:>16.12} {:>12.2e} {:>16.12}",
            exact - fb,
            bsc_nonfeedback_asymptotic(alpha)
        );
    }
    println!("\nthe residual shrinks like alpha^2 * log2(alpha)^2");
    Ok(())
}
