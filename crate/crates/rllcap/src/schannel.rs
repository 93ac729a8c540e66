//! Zero-error variable-length coding for the S-channel (β = 0).
//!
//! When β = 0 a transmitted 1 is always received as a 1, so the output 0 is
//! unambiguous evidence that a 0 was sent. The scheme exploits this with
//! feedback: to convey a message bit b the encoder transmits b, b̄, b, b̄, …
//! and stops at the first received 0. That stopping time has odd parity
//! exactly when b = 0, the decoder recovers b from the parity alone, and the
//! last transmitted symbol is always a 0 — so transmissions concatenate
//! without ever producing two consecutive ones.
//!
//! A 0 costs (1+α)/(1−α) channel uses on average and a 1 costs 2/(1−α), so
//! the bitstream is shaped: messages are mapped enumeratively onto
//! constant-weight blocks whose ones-fraction maximizes entropy per expected
//! channel use. The maximized ratio is exactly the S-channel feedback
//! capacity, which the scheme therefore approaches as the block length grows
//! while keeping the error probability at zero.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{maximize_with_scan, s_channel_capacity};
use crate::channel::{binary_entropy, Bit, BitStream, ChannelParams};
use crate::rng::{stream, Role};
use crate::Error;

/// Hard cap on channel uses for a single bit transmission.
pub const TRANSMISSION_CAP: usize = 1_000_000;

/// Exact binomial coefficient. Intermediate products stay exact in u128 for
/// n ≤ 64 because every prefix of the multiplicative formula is itself a
/// binomial coefficient.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=k {
        c = c * (n - k + i) as u128 / i as u128;
    }
    c
}

/// Lexicographic unranking: the `index`-th binary word of length `n` and
/// weight `w`, with 0 < 1 and index 0 the word 0…01…1.
pub fn enumerative_encode(index: u128, n: usize, w: usize) -> Result<Vec<Bit>, Error> {
    if n == 0 || n > 64 || w > n {
        return Err(Error::Config(format!(
            "enumerative block needs 1 <= n <= 64 and w <= n, got n={n}, w={w}"
        )));
    }
    let count = binomial(n, w);
    if index >= count {
        return Err(Error::IndexOutOfRange { index, count, n, w });
    }
    let mut bits = Vec::with_capacity(n);
    let mut idx = index;
    let mut w_left = w;
    for pos in 0..n {
        let rest = n - pos - 1;
        let with_zero = binomial(rest, w_left);
        if idx < with_zero {
            bits.push(0);
        } else {
            idx -= with_zero;
            bits.push(1);
            w_left -= 1;
        }
    }
    debug_assert_eq!(w_left, 0);
    Ok(bits)
}

/// Lexicographic ranking, the inverse of [`enumerative_encode`]. The block
/// must have weight exactly `w`.
pub fn enumerative_decode(bits: &[Bit], w: usize) -> Result<u128, Error> {
    let n = bits.len();
    if n == 0 || n > 64 || w > n {
        return Err(Error::Config(format!(
            "enumerative block needs 1 <= n <= 64 and w <= n, got n={n}, w={w}"
        )));
    }
    let actual = bits.iter().filter(|&&b| b == 1).count();
    if actual != w {
        return Err(Error::WrongWeight {
            expected: w,
            actual,
        });
    }
    let mut index: u128 = 0;
    let mut w_left = w;
    for (pos, &b) in bits.iter().enumerate() {
        if b == 1 {
            index += binomial(n - pos - 1, w_left);
            w_left -= 1;
        }
    }
    Ok(index)
}

/// Channel-use record for one message bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BitTransmission {
    /// Number of channel uses (the stopping time).
    pub uses: usize,
    /// Transmitted symbols: b, b̄, b, b̄, … .
    pub sent: Vec<Bit>,
    /// Received symbols; the last one is always 0.
    pub received: Vec<Bit>,
}

/// Transmits one message bit with the alternate-until-zero rule, stopping at
/// the first received 0.
pub fn transmit_bit(
    bit: Bit,
    params: &ChannelParams,
    rng: &mut impl Rng,
    cap: usize,
) -> Result<BitTransmission, Error> {
    let mut sent = Vec::new();
    let mut received = Vec::new();
    for i in 0..cap {
        let x = if i % 2 == 0 { bit } else { 1 - bit };
        let y = params.transmit(x, rng);
        sent.push(x);
        received.push(y);
        if y == 0 {
            return Ok(BitTransmission {
                uses: i + 1,
                sent,
                received,
            });
        }
    }
    Err(Error::NoTermination { cap })
}

/// Recovers the message bit from the stopping time's parity.
pub fn decode_bit(uses: usize) -> Bit {
    if uses % 2 == 1 {
        0
    } else {
        1
    }
}

/// Expected stopping time for one message bit on an S-channel.
pub fn expected_uses(bit: Bit, alpha: f64) -> f64 {
    if bit == 0 {
        (1.0 + alpha) / (1.0 - alpha)
    } else {
        2.0 / (1.0 - alpha)
    }
}

/// Expected stopping time per bit when the bitstream has ones-fraction `z`.
pub fn expected_uses_shaped(z: f64, alpha: f64) -> f64 {
    (1.0 - z) * expected_uses(0, alpha) + z * expected_uses(1, alpha)
}

/// The entropy-per-expected-use optimum for the shaped bitstream.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ShapingResult {
    /// Optimal ones-fraction of the message bitstream.
    pub z_opt: f64,
    /// Achieved bits per channel use, H₂(z*) / E[uses at z*].
    pub rate: f64,
}

/// Maximizes H₂(z) / E[uses per bit at z] over z ∈ (0, 1). The maximum is the
/// S-channel feedback capacity.
pub fn optimal_shaping(alpha: f64) -> Result<ShapingResult, Error> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidProbability {
            name: "alpha",
            value: alpha,
        });
    }
    let objective = |z: f64| binary_entropy(z) / expected_uses_shaped(z, alpha);
    let (z_opt, rate) = maximize_with_scan(objective, 1e-9, 1.0 - 1e-9, 1e-12, 1000);
    Ok(ShapingResult { z_opt, rate })
}

/// One simulated block transmission.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchannelTrial {
    pub trial: u64,
    pub seed: u64,
    pub block_len: usize,
    pub weight: usize,
    /// Total channel uses for the block.
    pub uses: usize,
    /// log₂ C(block_len, weight) / uses.
    pub rate: f64,
    pub decoded_ok: bool,
}

/// Aggregate results of [`run_schannel_scheme`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchannelSummary {
    pub alpha: f64,
    pub block_len: usize,
    pub weight: usize,
    /// log₂ of the number of messages one block can carry.
    pub bits_per_block: f64,
    pub trials: Vec<SchannelTrial>,
    /// Decoding failures across all trials (always 0: the scheme is
    /// zero-error on the S-channel).
    pub errors: usize,
    pub mean_uses: f64,
    /// (1+p)/(1−α) per bit at the block's own ones-fraction, times block_len.
    pub expected_uses: f64,
    pub mean_rate: f64,
    pub shaping: ShapingResult,
    pub capacity: f64,
}

/// Runs the full scheme: enumerative shaping onto a constant-weight block,
/// alternate-until-zero transmission of each bit, parity decoding, and
/// enumerative unranking. Requires β = 0 and α < 1.
pub fn run_schannel_scheme(
    params: &ChannelParams,
    block_len: usize,
    trials: u64,
    seed: u64,
) -> Result<SchannelSummary, Error> {
    if params.beta() != 0.0 {
        return Err(Error::Config(format!(
            "the zero-error scheme needs an S-channel (β = 0), got β = {}",
            params.beta()
        )));
    }
    let alpha = params.alpha();
    if alpha >= 1.0 {
        return Err(Error::Config(
            "α = 1 gives a constant-output channel with zero capacity".into(),
        ));
    }
    if !(2..=64).contains(&block_len) {
        return Err(Error::Config(format!(
            "block length must be in 2..=64, got {block_len}"
        )));
    }

    let shaping = optimal_shaping(alpha)?;
    let weight = ((block_len as f64 * shaping.z_opt).floor() as usize).clamp(1, block_len - 1);
    let count = binomial(block_len, weight);
    let bits_per_block = (count as f64).log2();
    let z_eff = weight as f64 / block_len as f64;
    let expected_block_uses = block_len as f64 * expected_uses_shaped(z_eff, alpha);

    let mut rows = Vec::with_capacity(trials as usize);
    let mut errors = 0usize;
    for trial in 0..trials {
        let mut msg_rng = stream(seed, Role::Message, trial);
        let index = msg_rng.gen_range(0..count);
        let block = enumerative_encode(index, block_len, weight)?;

        let mut ch_rng = stream(seed, Role::Channel, trial);
        let mut all_sent = BitStream::default();
        let mut decoded = Vec::with_capacity(block_len);
        let mut uses = 0usize;
        for &b in &block {
            let tx = transmit_bit(b, params, &mut ch_rng, TRANSMISSION_CAP)?;
            uses += tx.uses;
            for &s in &tx.sent {
                all_sent.push(s);
            }
            assert_eq!(*tx.sent.last().unwrap(), 0, "stopping symbol must be 0");
            decoded.push(decode_bit(tx.uses));
        }
        assert!(
            all_sent.satisfies_rll(),
            "concatenated transmissions must respect the no-consecutive-ones constraint"
        );

        let decoded_ok = match enumerative_decode(&decoded, weight) {
            Ok(decoded_index) => decoded_index == index,
            Err(_) => false,
        };
        if !decoded_ok {
            errors += 1;
        }
        rows.push(SchannelTrial {
            trial,
            seed,
            block_len,
            weight,
            uses,
            rate: bits_per_block / uses as f64,
            decoded_ok,
        });
    }

    let mean_uses = rows.iter().map(|r| r.uses as f64).sum::<f64>() / rows.len().max(1) as f64;
    let mean_rate = rows.iter().map(|r| r.rate).sum::<f64>() / rows.len().max(1) as f64;
    let capacity = s_channel_capacity(alpha)?.capacity;
    Ok(SchannelSummary {
        alpha,
        block_len,
        weight,
        bits_per_block,
        trials: rows,
        errors,
        mean_uses,
        expected_uses: expected_block_uses,
        mean_rate,
        shaping,
        capacity,
    })
}
