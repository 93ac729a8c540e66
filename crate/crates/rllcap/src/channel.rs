//! Binary channel primitives: parameters, canonicalization, sampling.
//!
//! The channel flips an input 0 to output 1 with probability α and an input 1
//! to output 0 with probability β. Relabeling the output (Y ↦ 1−Y) swaps
//! (α, β) to (1−α, 1−β) without changing capacity, so every (α, β) has an
//! equivalent representative with α + β ≤ 1; all downstream computations
//! assume that canonical form and reject parameters outside it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::Error;

/// A channel input or output symbol, 0 or 1.
pub type Bit = u8;

/// Slack used when accepting probabilities that picked up float error.
const PROB_EPS: f64 = 1e-9;

/// Binary entropy in bits, with 0·log 0 = 0.
///
/// Accepts arguments a hair outside [0, 1] (|excess| ≤ 1e-9) because callers
/// feed it differences of computed probabilities; anything further out panics.
pub fn binary_entropy(p: f64) -> f64 {
    assert!(
        (-PROB_EPS..=1.0 + PROB_EPS).contains(&p),
        "binary_entropy argument {p} outside [0,1]"
    );
    let p = p.clamp(0.0, 1.0);
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.log2();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).log2();
    }
    h
}

/// Crossover pair (α, β) with α = P(Y=1|X=0) and β = P(Y=0|X=1).
///
/// Constructed values always satisfy α + β ≤ 1; use [`ChannelParams::canonical`]
/// to fold arbitrary crossovers into that form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    alpha: f64,
    beta: f64,
}

impl ChannelParams {
    /// Builds canonical parameters. Errors if either argument is not a
    /// probability or if α + β > 1 (relabel with [`ChannelParams::canonical`]
    /// first).
    pub fn new(alpha: f64, beta: f64) -> Result<Self, Error> {
        if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
            return Err(Error::InvalidProbability {
                name: "alpha",
                value: alpha,
            });
        }
        if !(0.0..=1.0).contains(&beta) || !beta.is_finite() {
            return Err(Error::InvalidProbability {
                name: "beta",
                value: beta,
            });
        }
        if alpha + beta > 1.0 {
            return Err(Error::NotCanonical { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    /// Folds an arbitrary crossover pair into canonical form by relabeling the
    /// output when α + β > 1. Returns the representative and whether the
    /// relabeling was applied.
    pub fn canonical(alpha: f64, beta: f64) -> Result<(Self, bool), Error> {
        if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
            return Err(Error::InvalidProbability {
                name: "alpha",
                value: alpha,
            });
        }
        if !(0.0..=1.0).contains(&beta) || !beta.is_finite() {
            return Err(Error::InvalidProbability {
                name: "beta",
                value: beta,
            });
        }
        if alpha + beta > 1.0 {
            Ok((
                Self {
                    alpha: 1.0 - alpha,
                    beta: 1.0 - beta,
                },
                true,
            ))
        } else {
            Ok((Self { alpha, beta }, false))
        }
    }

    /// Symmetric channel with both crossovers equal to α.
    pub fn symmetric(alpha: f64) -> Result<Self, Error> {
        if alpha > 0.5 {
            return Err(Error::NotCanonical { alpha, beta: alpha });
        }
        Self::new(alpha, alpha)
    }

    /// Z-channel: input 0 is noiseless, input 1 flips with probability β.
    pub fn z_channel(beta: f64) -> Result<Self, Error> {
        Self::new(0.0, beta)
    }

    /// S-channel: input 1 is noiseless, input 0 flips with probability α.
    pub fn s_channel(alpha: f64) -> Result<Self, Error> {
        Self::new(alpha, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// 1 − α.
    pub fn alpha_bar(&self) -> f64 {
        1.0 - self.alpha
    }

    /// 1 − β.
    pub fn beta_bar(&self) -> f64 {
        1.0 - self.beta
    }

    /// P(Y = y | X = x).
    pub fn likelihood(&self, y: Bit, x: Bit) -> f64 {
        debug_assert!(y <= 1 && x <= 1);
        match (x, y) {
            (0, 0) => 1.0 - self.alpha,
            (0, 1) => self.alpha,
            (1, 0) => self.beta,
            (1, 1) => 1.0 - self.beta,
            _ => unreachable!("bits must be 0 or 1"),
        }
    }

    /// P(Y = 1) when the input is 1 with probability `x1`:
    /// α(1−x1) + (1−β)·x1. Linear and increasing in `x1` (for α+β < 1).
    pub fn output_one_prob(&self, x1: f64) -> f64 {
        self.alpha * (1.0 - x1) + (1.0 - self.beta) * x1
    }

    /// Samples one channel output for input `x`.
    pub fn transmit(&self, x: Bit, rng: &mut impl Rng) -> Bit {
        debug_assert!(x <= 1);
        let flip = match x {
            0 => rng.gen_bool(self.alpha),
            _ => rng.gen_bool(self.beta),
        };
        x ^ u8::from(flip)
    }
}

/// A recorded symbol sequence with an RLL check.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitStream(Vec<Bit>);

impl BitStream {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn push(&mut self, b: Bit) {
        debug_assert!(b <= 1);
        self.0.push(b);
    }

    pub fn extend_from(&mut self, bits: &[Bit]) {
        self.0.extend_from_slice(bits);
    }

    pub fn bits(&self) -> &[Bit] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<Bit> {
        self.0.last().copied()
    }

    /// True when no two consecutive symbols are both 1.
    pub fn satisfies_rll(&self) -> bool {
        self.0.windows(2).all(|w| !(w[0] == 1 && w[1] == 1))
    }
}

impl From<Vec<Bit>> for BitStream {
    fn from(bits: Vec<Bit>) -> Self {
        Self(bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Role};

    #[test]
    fn entropy_reference_points() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
        // -0.25·log2(0.25) - 0.75·log2(0.75), evaluated independently.
        assert!((binary_entropy(0.25) - 0.811_278_124_459_132_8).abs() < 1e-12);
    }

    #[test]
    fn entropy_is_symmetric() {
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            assert!((binary_entropy(p) - binary_entropy(1.0 - p)).abs() < 1e-15);
        }
    }

    #[test]
    #[should_panic(expected = "outside [0,1]")]
    fn entropy_rejects_far_out_of_range() {
        binary_entropy(1.5);
    }

    #[test]
    fn canonicalization_flips_when_needed() {
        let (p, flipped) = ChannelParams::canonical(0.9, 0.8).unwrap();
        assert!(flipped);
        assert!((p.alpha() - 0.1).abs() < 1e-15);
        assert!((p.beta() - 0.2).abs() < 1e-15);

        let (p, flipped) = ChannelParams::canonical(0.1, 0.2).unwrap();
        assert!(!flipped);
        assert_eq!((p.alpha(), p.beta()), (0.1, 0.2));
    }

    #[test]
    fn canonicalization_is_idempotent() {
        for &(a, b) in &[(0.9, 0.8), (0.3, 0.4), (0.5, 0.5), (1.0, 1.0), (0.0, 0.0)] {
            let (p, _) = ChannelParams::canonical(a, b).unwrap();
            let (q, flipped_again) = ChannelParams::canonical(p.alpha(), p.beta()).unwrap();
            assert!(!flipped_again);
            assert_eq!(p, q);
        }
    }

    #[test]
    fn constructor_rejects_non_canonical_and_non_probabilities() {
        assert!(ChannelParams::new(0.9, 0.8).is_err());
        assert!(ChannelParams::new(-0.1, 0.2).is_err());
        assert!(ChannelParams::new(0.1, 1.2).is_err());
        assert!(ChannelParams::new(f64::NAN, 0.2).is_err());
        assert!(ChannelParams::new(0.6, 0.4).is_ok());
    }

    #[test]
    fn likelihood_rows_sum_to_one() {
        let p = ChannelParams::new(0.3, 0.45).unwrap();
        for x in [0, 1] {
            let total: f64 = [0, 1].iter().map(|&y| p.likelihood(y, x)).sum();
            assert!((total - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn output_probability_interpolates_crossovers() {
        let p = ChannelParams::new(0.2, 0.3).unwrap();
        assert!((p.output_one_prob(0.0) - 0.2).abs() < 1e-15);
        assert!((p.output_one_prob(1.0) - 0.7).abs() < 1e-15);
        assert!((p.output_one_prob(0.5) - 0.45).abs() < 1e-15);
    }

    #[test]
    fn transmit_matches_crossovers_empirically() {
        let p = ChannelParams::new(0.2, 0.35).unwrap();
        let mut rng = stream(11, Role::Channel, 0);
        let n = 200_000;
        let flips0 = (0..n).filter(|_| p.transmit(0, &mut rng) == 1).count();
        let flips1 = (0..n).filter(|_| p.transmit(1, &mut rng) == 0).count();
        // 5σ bands: σ ≈ sqrt(p(1-p)/n) ≈ 0.001.
        assert!((flips0 as f64 / n as f64 - 0.2).abs() < 0.005);
        assert!((flips1 as f64 / n as f64 - 0.35).abs() < 0.005);
    }

    #[test]
    fn noiseless_channel_is_identity() {
        let p = ChannelParams::new(0.0, 0.0).unwrap();
        let mut rng = stream(1, Role::Channel, 0);
        for x in [0, 1] {
            assert_eq!(p.transmit(x, &mut rng), x);
        }
    }

    #[test]
    fn rll_check() {
        assert!(BitStream::from(vec![0, 1, 0, 1, 0, 0, 1]).satisfies_rll());
        assert!(!BitStream::from(vec![0, 1, 1, 0]).satisfies_rll());
        assert!(BitStream::new().satisfies_rll());
    }
}
