//! Feedback capacity of the (1,∞)-RLL input-constrained binary channel.
//!
//! A binary channel with crossover probabilities α = P(Y=1|X=0) and
//! β = P(Y=0|X=1) is driven by an encoder that sees perfect output feedback but
//! may never transmit two consecutive ones. This crate computes the feedback
//! capacity of that system three independent ways and simulates the coding
//! schemes that achieve it:
//!
//! - [`analytic`]: closed-form capacity as a one-dimensional maximization and,
//!   equivalently, as the root of a transcendental equation, plus the
//!   symmetric/Z/S special cases and small-noise expansions.
//! - [`qgraph`]: the optimal input policy as a four-node graph evaluated on
//!   output sequences, its stationary law, and the conditional mutual
//!   information it induces (a third route to the same capacity number).
//! - [`dp`]: the equivalent average-reward dynamic program on the posterior
//!   state P(X=0 | outputs so far), solved by relative value iteration, and the
//!   piecewise closed-form solution of its Bellman equation.
//! - [`pms`]: a posterior-matching coding scheme driven by the graph policy,
//!   with interval bookkeeping, list decoding, and a short confirmation phase.
//! - [`schannel`]: a zero-error variable-length scheme for the S-channel
//!   (β = 0) with enumerative constant-weight shaping.
//!
//! [`harness`] wires the pieces into reproducible experiments (CSV/JSON
//! output, seeded parallel trials), exposed through the `rllcap` binary.

pub mod analytic;
pub mod channel;
pub mod dp;
pub mod harness;
pub mod pms;
pub mod qgraph;
pub mod rng;
pub mod schannel;

use thiserror::Error;

/// Errors surfaced by capacity computations and scheme simulations.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter that must be a probability lies outside [0, 1].
    #[error("{name} = {value} is not a probability")]
    InvalidProbability { name: &'static str, value: f64 },

    /// An operation that requires α + β ≤ 1 was given flipped parameters.
    #[error("parameters (α={alpha}, β={beta}) are not canonical (α+β > 1)")]
    NotCanonical { alpha: f64, beta: f64 },

    /// The root-finding form of the capacity is singular at α + β = 1.
    #[error(
        "root form is singular on the line α+β=1 (α={alpha}, β={beta}); use the maximization form"
    )]
    SingularRootForm { alpha: f64, beta: f64 },

    /// The graph policy degenerates (a node is never entered or a transfer
    /// ratio is 0/0) and no continuity limit applies.
    #[error("degenerate graph policy for (α={alpha}, β={beta}): {detail}")]
    DegeneratePolicy {
        alpha: f64,
        beta: f64,
        detail: String,
    },

    /// A posterior update was asked to condition on an output that has
    /// probability zero in the current state.
    #[error("output y={y} has probability zero at graph node {q}")]
    ImpossibleObservation { y: u8, q: u8 },

    /// A dynamic-program transition conditioned on an output that the
    /// current action makes impossible.
    #[error("output y={y} has probability zero under action delta={delta}")]
    UnreachableOutput { y: u8, delta: f64 },

    /// Value iteration did not reach the requested span tolerance.
    #[error("value iteration did not converge in {iterations} sweeps (last span {span:.3e})")]
    NoConvergence { iterations: usize, span: f64 },

    /// A variable-length transmission exceeded the hard use cap.
    #[error("transmission did not terminate within {cap} channel uses")]
    NoTermination { cap: usize },

    /// An enumerative index is out of range for the requested block.
    #[error("index {index} out of range: only {count} sequences of length {n} and weight {w}")]
    IndexOutOfRange {
        index: u128,
        count: u128,
        n: usize,
        w: usize,
    },

    /// A shaped block does not have the weight its header claims.
    #[error("block has weight {actual}, expected {expected}")]
    WrongWeight { expected: usize, actual: usize },

    /// An invalid run configuration (CLI or programmatic).
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
