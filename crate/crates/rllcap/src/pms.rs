//! Posterior matching over the graph policy: interval coding with feedback.
//!
//! The message set is laid out as a partition of [0, 1) into intervals whose
//! lengths are the decoder's posterior probabilities. Each interval carries
//! the previous input it is conditioned on; the intervals conditioned on a 0
//! tile an initial segment of the line whose total mass equals the graph
//! policy's per-node posterior z_q. One coding step applies a shared uniform
//! cyclic shift to that segment, splits intervals at the wrap point and at
//! the transmit-1/transmit-0 boundary, lets the encoder pick the child that
//! contains its message (with private randomness proportional to child
//! sizes), transmits that child's input label, and then performs an exact
//! Bayes update of every interval from the observed output. Because the
//! shift and the output are all the decoder needs, it maintains the same
//! partition in lockstep; the simulation runs both copies and checks they
//! stay bit-identical.
//!
//! A transmission consists of an interval phase that builds a short list of
//! high-posterior messages, one guard 0 (so the two phases never produce
//! consecutive ones), and a confirmation phase that sends the message's list
//! position with repetition blocks. The module also computes the per-edge
//! moment weights used to bound the list-decoding error, both in closed form
//! and by Monte Carlo over the shift randomness.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{Bit, BitStream, ChannelParams};
use crate::qgraph::{build_policy, next_node, Node, QPolicy, NODES};
use crate::rng::{stream, Role};
use crate::Error;

/// Interval lengths below this are flushed to exact zero. The interval stays
/// in the set so the partition bookkeeping and index assignment are stable.
pub const LENGTH_FLOOR: f64 = 1e-300;

/// One message interval of the posterior partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageInterval {
    /// Unique id. When an interval splits, the first piece keeps the parent
    /// id and later pieces take fresh ids, so ids never collide.
    pub index: u64,
    /// The message (1-based) this interval's mass belongs to.
    pub message: u64,
    /// Posterior mass.
    pub length: f64,
    /// Left endpoint in the canonical tiling (derived, see `canonicalize`).
    pub left: f64,
    /// The previous channel input this interval is conditioned on. Intervals
    /// with 0 here are the ones eligible to transmit a 1 next.
    pub history_bit: Bit,
}

/// The full posterior partition plus the id counter for split pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    pub intervals: Vec<MessageInterval>,
    next_index: u64,
}

/// Children of one parent interval after a shift-and-split step, in the
/// order the split walk produced them.
#[derive(Debug, Clone)]
pub struct ParentSplit {
    pub parent: u64,
    /// (child id, child length, child input label)
    pub children: Vec<(u64, f64, Bit)>,
}

impl IntervalSet {
    /// Initial partition: `messages` equal intervals, the one straddling
    /// `boundary` split there, and everything left of the boundary
    /// conditioned on a previous 0.
    pub fn init(messages: u64, boundary: f64) -> Self {
        let m = messages as usize;
        let w = 1.0 / messages as f64;
        let mut intervals = Vec::with_capacity(m + 1);
        let mut straddler = None;
        for j in 1..=messages {
            let l = (j - 1) as f64 * w;
            let r = j as f64 * w;
            if l < boundary && boundary < r {
                intervals.push(MessageInterval {
                    index: j,
                    message: j,
                    length: boundary - l,
                    left: l,
                    history_bit: 0,
                });
                straddler = Some(MessageInterval {
                    index: messages + 1,
                    message: j,
                    length: r - boundary,
                    left: boundary,
                    history_bit: 1,
                });
            } else {
                intervals.push(MessageInterval {
                    index: j,
                    message: j,
                    length: w,
                    left: l,
                    history_bit: if r <= boundary { 0 } else { 1 },
                });
            }
        }
        let next_index = messages + if straddler.is_some() { 2 } else { 1 };
        if let Some(s) = straddler {
            intervals.push(s);
        }
        let mut set = Self {
            intervals,
            next_index,
        };
        set.canonicalize();
        set
    }

    /// Restores the canonical storage order (previous-input 0 first, then
    /// ascending id) and re-derives left endpoints as the running sum of
    /// lengths in that order.
    pub fn canonicalize(&mut self) {
        self.intervals
            .sort_by(|a, b| (a.history_bit, a.index).cmp(&(b.history_bit, b.index)));
        let mut left = 0.0;
        for iv in &mut self.intervals {
            iv.left = left;
            left += iv.length;
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.intervals.iter().map(|iv| iv.length).sum()
    }

    /// Mass conditioned on a previous 0 — the modulus of the cyclic shift.
    pub fn class_zero_mass(&self) -> f64 {
        self.intervals
            .iter()
            .filter(|iv| iv.history_bit == 0)
            .map(|iv| iv.length)
            .sum()
    }

    pub fn message_posterior(&self, message: u64) -> f64 {
        self.intervals
            .iter()
            .filter(|iv| iv.message == message)
            .map(|iv| iv.length)
            .sum()
    }

    pub fn max_length(&self) -> f64 {
        self.intervals
            .iter()
            .map(|iv| iv.length)
            .fold(0.0, f64::max)
    }

    /// One shift-and-split: cyclically shifts the previous-0 segment by
    /// `u`·(segment mass), splits intervals at the wrap point and at the
    /// transmit boundary `p1`, and stores each child's input label in
    /// `history_bit` (it becomes the conditioning bit of the next step).
    /// Previous-1 intervals pass through whole with label 0.
    ///
    /// Returns the per-parent children in traversal order; the encoder picks
    /// its transmitted symbol from the record of the interval it occupies.
    pub fn advance(&mut self, policy: &QPolicy, q: Node, u: f64) -> Vec<ParentSplit> {
        let p2: f64 = self.class_zero_mass();
        let p1 = policy.joint_x_xprev(1, 0, q).min(p2);
        let shift = u * p2;
        let mut new_intervals = Vec::with_capacity(self.intervals.len() + 3);
        let mut records = Vec::with_capacity(self.intervals.len());

        let mut t = 0.0;
        for iv in &self.intervals {
            if iv.history_bit != 0 {
                // Previous input 1 forces a 0 next; the interval passes
                // through unchanged.
                records.push(ParentSplit {
                    parent: iv.index,
                    children: vec![(iv.index, iv.length, 0)],
                });
                new_intervals.push(MessageInterval {
                    history_bit: 0,
                    ..iv.clone()
                });
                continue;
            }

            let s = iv.length;
            let mut pos = t + shift;
            if pos >= p2 {
                pos -= p2;
            }
            t += s;

            let mut children = Vec::with_capacity(3);
            let mut first = true;
            let mut remaining = s;
            let mut cursor = pos.max(0.0);
            loop {
                let label: Bit = if cursor < p1 { 1 } else { 0 };
                let cut = if cursor < p1 { p1 } else { p2 };
                let take = remaining.min((cut - cursor).max(0.0));
                let index = if first {
                    iv.index
                } else {
                    let id = self.next_index;
                    self.next_index += 1;
                    id
                };
                children.push((index, take, label));
                new_intervals.push(MessageInterval {
                    index,
                    message: iv.message,
                    length: take,
                    left: cursor,
                    history_bit: label,
                });
                first = false;
                remaining -= take;
                cursor += take;
                if cursor >= p2 {
                    cursor = 0.0;
                }
                if remaining <= 0.0 {
                    break;
                }
                debug_assert!(
                    children.len() <= 3,
                    "a segment splits into at most 3 pieces"
                );
            }
            records.push(ParentSplit {
                parent: iv.index,
                children,
            });
        }
        self.intervals = new_intervals;
        records
    }

    /// Exact Bayes update after observing output `y`: every interval's mass
    /// is multiplied by P(y | its input label) / P(y | node), tiny masses are
    /// flushed to zero, and the whole partition is renormalized by its exact
    /// sum. Returns the pre-renormalization total (≈ 1; its drift from 1
    /// measures accumulated floating-point error).
    pub fn bayes_update(
        &mut self,
        params: &ChannelParams,
        output_prob: f64,
        y: Bit,
    ) -> Result<f64, Error> {
        for iv in &mut self.intervals {
            iv.length *= params.likelihood(y, iv.history_bit) / output_prob;
            if iv.length < LENGTH_FLOOR {
                iv.length = 0.0;
            }
        }
        let total = self.total_mass();
        if !(total > 0.0) {
            return Err(Error::Config(
                "posterior mass vanished during the interval phase".into(),
            ));
        }
        for iv in &mut self.intervals {
            iv.length /= total;
        }
        Ok(total)
    }
}

/// Largest per-step posterior growth factor max p(y|x)/P(y|q) over
/// positive-probability configurations. Interval lengths obey
/// length ≤ (1/M)·factor^steps along every path.
pub fn max_update_ratio(policy: &QPolicy) -> f64 {
    let mut r: f64 = 0.0;
    for q in NODES {
        for x in [0u8, 1u8] {
            let px1 = policy.input_one_prob(q);
            let px = if x == 1 { px1 } else { 1.0 - px1 };
            if px <= 0.0 {
                continue;
            }
            for y in [0u8, 1u8] {
                let like = policy.params().likelihood(y, x);
                let out = policy.output_prob(q, y);
                if like > 0.0 && out > 0.0 {
                    r = r.max(like / out);
                }
            }
        }
    }
    r
}

/// Sizing of the confirmation phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhasePlan {
    /// Interval-coding steps.
    pub phase1_steps: usize,
    /// Bits of list position sent in confirmation.
    pub position_bits: usize,
    /// Symbols per repetition block (≡ 2 mod 4, so the repeated-bit count
    /// per block is odd and majority votes cannot tie).
    pub repetition_len: usize,
}

/// P[Bin(m, p) ≥ ⌈(m+1)/2⌉]: the probability a majority of m repetitions
/// flips, summed exactly by term recurrence.
pub fn majority_flip_probability(m: usize, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let j0 = m / 2 + 1;
    let q = 1.0 - p;
    let mut term = q.powi(m as i32);
    let mut sum = 0.0;
    for j in 0..=m {
        if j >= j0 {
            sum += term;
        }
        if j < m {
            term *= (m - j) as f64 / (j + 1) as f64 * (p / q);
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Number of position bits: enough to index any list the interval phase can
/// produce, ⌈log₂(horizon / threshold)⌉.
pub fn position_bits(horizon: usize, threshold: f64) -> usize {
    ((horizon as f64 / threshold).log2().ceil() as usize).max(1)
}

/// Repetition length per position bit: the smallest block ≡ 2 (mod 4) whose
/// exact majority-flip probability is at most 1/(position bits)², capped so
/// the whole confirmation phase fits in half the horizon.
pub fn repetition_length(horizon: usize, bits: usize, flip: f64) -> usize {
    let target = 1.0 / (bits * bits) as f64;
    let cap_raw = (horizon / 2) / bits.max(1);
    let cap = if cap_raw < 2 {
        2
    } else {
        cap_raw - (cap_raw - 2) % 4
    };
    let mut l = 2usize;
    loop {
        if l >= cap || majority_flip_probability(l / 2, flip) <= target {
            return l.min(cap);
        }
        l += 4;
    }
}

/// Splits the horizon into interval phase, one guard 0, and confirmation.
pub fn phase_plan(horizon: usize, threshold: f64, flip: f64) -> Result<PhasePlan, Error> {
    if !(threshold > 0.0) {
        return Err(Error::Config(format!(
            "list threshold must be positive, got {threshold}"
        )));
    }
    let bits = position_bits(horizon, threshold);
    let rep = repetition_length(horizon, bits, flip);
    let confirmation = bits * rep;
    if horizon <= confirmation + 1 {
        return Err(Error::Config(format!(
            "horizon {horizon} leaves no room for the interval phase \
             ({bits} position bits × {rep} symbols + 1 guard)"
        )));
    }
    Ok(PhasePlan {
        phase1_steps: horizon - 1 - confirmation,
        position_bits: bits,
        repetition_len: rep,
    })
}

/// Configuration of one simulated transmission.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PmsConfig {
    pub params: ChannelParams,
    /// Message count M ≥ 2 (messages are 1..=M).
    pub messages: u64,
    /// Total channel uses across both phases.
    pub horizon: usize,
    pub seed: u64,
    pub trial: u64,
    /// Optional list threshold ξ; the effective threshold is
    /// min(ξ, smallest positive per-node joint mass).
    pub list_threshold: Option<f64>,
    /// Record a per-step trace (off for batch runs).
    pub record_trace: bool,
}

/// One interval-phase step of the trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PmsStepRecord {
    pub step: usize,
    /// Node before the step.
    pub q: Node,
    /// Shared shift draw.
    pub u: f64,
    /// Transmitted and received bits.
    pub x: Bit,
    pub y: Bit,
    pub interval_count: usize,
    pub true_message_posterior: f64,
    pub max_interval_length: f64,
    pub class_zero_mass: f64,
}

/// Outcome of one simulated transmission.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PmsRunResult {
    pub alpha: f64,
    pub beta: f64,
    pub messages: u64,
    pub horizon: usize,
    pub seed: u64,
    pub trial: u64,
    pub true_message: u64,
    pub decoded_message: Option<u64>,
    pub success: bool,
    /// Whether the true message made the decoder's list.
    pub listed: bool,
    pub list: Vec<u64>,
    pub list_position: Option<usize>,
    /// Effective list threshold ξ*.
    pub threshold: f64,
    pub phase1_steps: usize,
    pub position_bits: usize,
    pub repetition_len: usize,
    pub final_true_posterior: f64,
    pub interval_count: usize,
    /// Largest |pre-renormalization mass − 1| across steps.
    pub max_mass_drift: f64,
    /// Largest |previous-0 mass − z_node| across steps.
    pub max_partition_gap: f64,
    /// Every interval stayed within (1/M)·(max update ratio)^step.
    pub length_bound_ok: bool,
    /// The full transmitted stream never contained consecutive ones.
    pub rll_ok: bool,
    pub trace: Vec<PmsStepRecord>,
}

fn assert_sets_identical(enc: &IntervalSet, dec: &IntervalSet, step: usize) {
    assert_eq!(
        enc, dec,
        "encoder and decoder partitions diverged at step {step}: the decoder \
         must be able to reproduce the encoder's bookkeeping from (u, y) alone"
    );
}

/// Runs one full transmission: interval phase with list collection, guard 0,
/// and repetition-coded confirmation of the list position. The encoder and
/// decoder partitions are maintained separately and checked for bit-identical
/// agreement at every step.
pub fn run_pms(config: &PmsConfig) -> Result<PmsRunResult, Error> {
    let params = &config.params;
    if config.messages < 2 {
        return Err(Error::Config(format!(
            "need at least 2 messages, got {}",
            config.messages
        )));
    }
    if config.messages > 1_000_000 {
        return Err(Error::Config(format!(
            "message count {} is beyond the desk-scale simulator",
            config.messages
        )));
    }
    let policy = build_policy(params)?;
    let s_min = policy.s_min();
    let threshold = config
        .list_threshold
        .map(|xi| if xi > 0.0 { xi.min(s_min) } else { s_min })
        .unwrap_or(s_min);
    let flip = params.alpha().max(params.beta());
    let plan = phase_plan(config.horizon, threshold, flip)?;
    let ratio = max_update_ratio(&policy);

    let mut shared = stream(config.seed, Role::Shared, config.trial);
    let mut private = stream(config.seed, Role::EncoderPrivate, config.trial);
    let mut channel = stream(config.seed, Role::Channel, config.trial);
    let mut message_rng = stream(config.seed, Role::Message, config.trial);

    let true_message = message_rng.gen_range(1..=config.messages);

    let mut q: Node = 2;
    let z2 = policy.x_prev_zero_prob(2);
    let mut enc_set = IntervalSet::init(config.messages, z2);
    let mut dec_set = enc_set.clone();
    let mut rep_index = true_message;

    let mut sent = BitStream::default();
    let mut list: Vec<u64> = Vec::new();
    let mut max_mass_drift = 0.0f64;
    let mut max_partition_gap = 0.0f64;
    let mut length_bound_ok = true;
    let mut trace = Vec::new();

    let collect_list = |set: &IntervalSet, list: &mut Vec<u64>| {
        // Scan in canonical order; a message joins the list the first time
        // its posterior reaches the threshold.
        let mut posterior = vec![0.0f64; config.messages as usize + 1];
        for iv in &set.intervals {
            posterior[iv.message as usize] += iv.length;
        }
        for iv in &set.intervals {
            let m = iv.message;
            if posterior[m as usize] >= threshold && !list.contains(&m) {
                list.push(m);
            }
        }
    };
    collect_list(&dec_set, &mut list);

    for step in 0..plan.phase1_steps {
        let u: f64 = shared.gen();
        let q_before = q;

        let records = enc_set.advance(&policy, q, u);
        let dec_records = dec_set.advance(&policy, q, u);
        drop(dec_records);

        let split = records
            .iter()
            .find(|r| r.parent == rep_index)
            .expect("the occupied interval always has a split record");
        let v: f64 = private.gen();
        let parent_len: f64 = split.children.iter().map(|c| c.1).sum();
        let mut chosen = split.children[0];
        if parent_len > 0.0 {
            let mut cum = 0.0;
            for &child in &split.children {
                cum += child.1;
                if v * parent_len < cum {
                    chosen = child;
                    break;
                }
                chosen = child;
            }
        }
        rep_index = chosen.0;
        let x = chosen.2;

        let y = params.transmit(x, &mut channel);
        sent.push(x);

        let out_prob = policy.output_prob(q, y);
        if out_prob <= 0.0 {
            return Err(Error::ImpossibleObservation { y, q });
        }
        let total_enc = enc_set.bayes_update(params, out_prob, y)?;
        let total_dec = dec_set.bayes_update(params, out_prob, y)?;
        debug_assert_eq!(total_enc.to_bits(), total_dec.to_bits());
        enc_set.canonicalize();
        dec_set.canonicalize();
        assert_sets_identical(&enc_set, &dec_set, step);

        q = next_node(q, y);

        max_mass_drift = max_mass_drift.max((total_enc - 1.0).abs());
        let gap = (enc_set.class_zero_mass() - policy.x_prev_zero_prob(q)).abs();
        max_partition_gap = max_partition_gap.max(gap);
        let bound = ratio.powi(step as i32 + 1) / config.messages as f64;
        if enc_set.max_length() > bound * (1.0 + 1e-9) {
            length_bound_ok = false;
        }

        collect_list(&dec_set, &mut list);
        if config.record_trace {
            trace.push(PmsStepRecord {
                step,
                q: q_before,
                u,
                x,
                y,
                interval_count: enc_set.intervals.len(),
                true_message_posterior: enc_set.message_posterior(true_message),
                max_interval_length: enc_set.max_length(),
                class_zero_mass: enc_set.class_zero_mass(),
            });
        }
    }

    // Guard symbol: a mandatory 0 separating the phases, so a trailing 1
    // from the interval phase can never precede a leading 1 of a block.
    let _ = params.transmit(0, &mut channel);
    sent.push(0);

    // Confirmation phase: the true message's list position (0 if unlisted),
    // most significant bit first, each bit as a b0b0…b0 block.
    let list_position = list.iter().position(|&m| m == true_message);
    let listed = list_position.is_some();
    let position = list_position.unwrap_or(0);
    assert!(
        (position as u128) < 1u128 << plan.position_bits,
        "list positions always fit in the planned bit budget"
    );

    let mut received_blocks: Vec<Vec<Bit>> = Vec::with_capacity(plan.position_bits);
    for b in (0..plan.position_bits).rev() {
        let bit = ((position >> b) & 1) as Bit;
        let mut block = Vec::with_capacity(plan.repetition_len);
        for i in 0..plan.repetition_len {
            let x = if i % 2 == 0 { bit } else { 0 };
            let y = params.transmit(x, &mut channel);
            sent.push(x);
            block.push(y);
        }
        received_blocks.push(block);
    }
    assert_eq!(sent.len(), config.horizon, "the budget is spent exactly");
    let rll_ok = sent.satisfies_rll();

    // Majority decode of each block over the repeated-bit positions.
    let vote_threshold = (params.alpha() + params.beta_bar()) / 2.0;
    let mut decoded_position = 0usize;
    for block in &received_blocks {
        let votes = plan.repetition_len / 2;
        let ones = block.iter().step_by(2).filter(|&&y| y == 1).count();
        let bit = if (ones as f64 / votes as f64) <= vote_threshold {
            0
        } else {
            1
        };
        decoded_position = (decoded_position << 1) | bit;
    }
    let decoded_message = list.get(decoded_position).copied();
    let success = decoded_message == Some(true_message);

    Ok(PmsRunResult {
        alpha: params.alpha(),
        beta: params.beta(),
        messages: config.messages,
        horizon: config.horizon,
        seed: config.seed,
        trial: config.trial,
        true_message,
        decoded_message,
        success,
        listed,
        list,
        list_position,
        threshold,
        phase1_steps: plan.phase1_steps,
        position_bits: plan.position_bits,
        repetition_len: plan.repetition_len,
        final_true_posterior: enc_set.message_posterior(true_message),
        interval_count: enc_set.intervals.len(),
        max_mass_drift,
        max_partition_gap,
        length_bound_ok,
        rll_ok,
        trace,
    })
}

/// Aggregate of independent seeded transmissions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PmsBatch {
    pub alpha: f64,
    pub beta: f64,
    pub messages: u64,
    pub horizon: usize,
    pub trials: u64,
    pub seed: u64,
    pub errors: usize,
    pub error_rate: f64,
    /// Trials where the true message missed the list entirely.
    pub unlisted: usize,
    pub max_mass_drift: f64,
    pub max_partition_gap: f64,
    pub all_length_bounds_ok: bool,
    pub all_rll_ok: bool,
    pub runs: Vec<PmsRunResult>,
}

/// Runs `trials` independent transmissions in parallel (each trial draws its
/// own random streams, so the aggregate is independent of scheduling).
pub fn run_pms_batch(
    params: &ChannelParams,
    messages: u64,
    horizon: usize,
    trials: u64,
    seed: u64,
) -> Result<PmsBatch, Error> {
    let runs: Vec<PmsRunResult> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            run_pms(&PmsConfig {
                params: *params,
                messages,
                horizon,
                seed,
                trial,
                list_threshold: None,
                record_trace: false,
            })
        })
        .collect::<Result<_, _>>()?;
    let errors = runs.iter().filter(|r| !r.success).count();
    let unlisted = runs.iter().filter(|r| !r.listed).count();
    Ok(PmsBatch {
        alpha: params.alpha(),
        beta: params.beta(),
        messages,
        horizon,
        trials,
        seed,
        errors,
        error_rate: errors as f64 / trials.max(1) as f64,
        unlisted,
        max_mass_drift: runs.iter().map(|r| r.max_mass_drift).fold(0.0, f64::max),
        max_partition_gap: runs.iter().map(|r| r.max_partition_gap).fold(0.0, f64::max),
        all_length_bounds_ok: runs.iter().all(|r| r.length_bound_ok),
        all_rll_ok: runs.iter().all(|r| r.rll_ok),
        runs,
    })
}

// ---------------------------------------------------------------------------
// Per-edge moment weights of the list-decoding analysis.

/// An admissible (node, previous input, input, next node) tuple: the input
/// has positive probability given (node, previous input), and the next node
/// is reachable from the node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsiTuple {
    pub q: Node,
    pub x_prev: Bit,
    pub x: Bit,
    pub q_next: Node,
}

/// All admissible tuples in a fixed scan order.
pub fn psi_tuples(policy: &QPolicy) -> Vec<PsiTuple> {
    let mut tuples = Vec::new();
    for q in NODES {
        for x_prev in [0u8, 1u8] {
            for x in [0u8, 1u8] {
                if policy.joint_x_xprev(x, x_prev, q) <= 0.0 {
                    continue;
                }
                for y in [0u8, 1u8] {
                    tuples.push(PsiTuple {
                        q,
                        x_prev,
                        x,
                        q_next: next_node(q, y),
                    });
                }
            }
        }
    }
    tuples
}

fn edge_output(q: Node, q_next: Node) -> Result<Bit, Error> {
    for y in [0u8, 1u8] {
        if next_node(q, y) == q_next {
            return Ok(y);
        }
    }
    Err(Error::Config(format!(
        "node {q_next} is not reachable from node {q} in one step"
    )))
}

/// The base weight (p(y|x)/P(y|q))^(−ρ) for the edge q→q_next, where y is
/// the output that drives that edge. Zero when p(y|x) = 0.
pub fn phi_weight(policy: &QPolicy, q: Node, x: Bit, q_next: Node, rho: f64) -> Result<f64, Error> {
    let y = edge_output(q, q_next)?;
    let like = policy.params().likelihood(y, x);
    if like <= 0.0 {
        return Ok(0.0);
    }
    let out = policy.output_prob(q, y);
    if out <= 0.0 {
        return Err(Error::ImpossibleObservation { y, q });
    }
    Ok((like / out).powf(-rho))
}

fn validate_psi_inputs(policy: &QPolicy, s: f64, rho: f64) -> Result<(), Error> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Config(format!("ρ must be in [0, 1), got {rho}")));
    }
    let s_min = policy.s_min();
    if !(s > 0.0 && s <= s_min * (1.0 + 1e-12)) {
        return Err(Error::Config(format!(
            "interval length {s} must lie in (0, {s_min}] for the moment \
             formulas to apply"
        )));
    }
    Ok(())
}

/// Closed-form moment weight of one tuple at interval length `s`:
/// the base weight times E[(child/parent)^(−ρ)] over the shift randomness,
/// conditioned on the child carrying input `x`. For previous input 1 the
/// interval never splits and the factor is 1; for previous input 0 it is
/// 1 + (s/P)·ρ/(2−ρ) with P the joint mass of (input, previous 0) at the
/// node.
pub fn psi_closed_form(policy: &QPolicy, tuple: PsiTuple, s: f64, rho: f64) -> Result<f64, Error> {
    validate_psi_inputs(policy, s, rho)?;
    let phi = phi_weight(policy, tuple.q, tuple.x, tuple.q_next, rho)?;
    if tuple.x_prev == 1 {
        if tuple.x != 0 {
            return Err(Error::Config("after an input 1 only a 0 may follow".into()));
        }
        return Ok(phi);
    }
    let p = policy.joint_x_xprev(tuple.x, 0, tuple.q);
    if p <= 0.0 {
        return Err(Error::Config(format!(
            "input {} never follows a previous 0 at node {}",
            tuple.x, tuple.q
        )));
    }
    Ok(phi * (1.0 + (s / p) * rho / (2.0 - rho)))
}

/// Uniform bound on the split factor: the bracket of `psi_closed_form`
/// evaluated at the smallest positive joint mass, so that every tuple obeys
/// closed form ≤ base weight × bound, with equality where the minimum is
/// attained.
pub fn psi_bound_factor(policy: &QPolicy, s: f64, rho: f64) -> f64 {
    1.0 + (s / policy.s_min()) * rho / (2.0 - rho)
}

/// Monte Carlo estimate of the same moment: draws the shift position and the
/// child selection exactly as the coding step does, rejects selections whose
/// input label differs from the tuple's, and averages (child/parent)^(−ρ).
/// Returns (estimate, standard error, accepted samples).
pub fn psi_monte_carlo(
    policy: &QPolicy,
    tuple: PsiTuple,
    s: f64,
    rho: f64,
    samples: usize,
    rng: &mut ChaCha12Rng,
) -> Result<(f64, f64, usize), Error> {
    validate_psi_inputs(policy, s, rho)?;
    let phi = phi_weight(policy, tuple.q, tuple.x, tuple.q_next, rho)?;
    if tuple.x_prev == 1 {
        if tuple.x != 0 {
            return Err(Error::Config("after an input 1 only a 0 may follow".into()));
        }
        // The interval passes through whole: the factor is identically 1.
        return Ok((phi, 0.0, samples));
    }
    let p2 = policy.x_prev_zero_prob(tuple.q);
    let p1 = policy.joint_x_xprev(1, 0, tuple.q).min(p2);
    if policy.joint_x_xprev(tuple.x, 0, tuple.q) <= 0.0 {
        return Err(Error::Config(format!(
            "input {} never follows a previous 0 at node {}",
            tuple.x, tuple.q
        )));
    }

    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut accepted = 0usize;
    for _ in 0..samples {
        let tau: f64 = rng.gen::<f64>() * p2;
        let v: f64 = rng.gen();

        // Split [τ, τ+s) cyclically at the transmit boundary and the wrap.
        let mut segments: Vec<(f64, Bit)> = Vec::with_capacity(3);
        let mut cursor = tau;
        let mut remaining = s;
        while remaining > 0.0 {
            let label: Bit = if cursor < p1 { 1 } else { 0 };
            let cut = if cursor < p1 { p1 } else { p2 };
            let take = remaining.min((cut - cursor).max(0.0));
            segments.push((take, label));
            remaining -= take;
            cursor += take;
            if cursor >= p2 {
                cursor = 0.0;
            }
            debug_assert!(segments.len() <= 3);
        }

        let mut chosen = segments[0];
        let mut cum = 0.0;
        for &seg in &segments {
            cum += seg.0;
            if v * s < cum {
                chosen = seg;
                break;
            }
            chosen = seg;
        }
        if chosen.1 != tuple.x {
            continue;
        }
        let w = (chosen.0 / s).powf(-rho);
        sum += w;
        sum_sq += w * w;
        accepted += 1;
    }
    if accepted == 0 {
        return Err(Error::Config(
            "no Monte Carlo samples accepted; the tuple's conditional has \
             vanishing probability"
                .into(),
        ));
    }
    let mean = sum / accepted as f64;
    let var = if accepted > 1 {
        ((sum_sq - accepted as f64 * mean * mean) / (accepted - 1) as f64).max(0.0)
    } else {
        0.0
    };
    let se = (var / accepted as f64).sqrt();
    Ok((phi * mean, phi * se, accepted))
}

/// Closed form, Monte Carlo, and bound for one tuple, side by side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsiEstimate {
    pub tuple: PsiTuple,
    pub phi: f64,
    pub closed_form: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub accepted: usize,
    /// phi × uniform bound factor.
    pub bound: f64,
}

/// Evaluates every admissible tuple: closed form, Monte Carlo over the shift
/// randomness, and the uniform bound.
pub fn psi_check(
    policy: &QPolicy,
    s: f64,
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<PsiEstimate>, Error> {
    let factor = psi_bound_factor(policy, s, rho);
    psi_tuples(policy)
        .into_iter()
        .enumerate()
        .map(|(i, tuple)| {
            let phi = phi_weight(policy, tuple.q, tuple.x, tuple.q_next, rho)?;
            let closed_form = psi_closed_form(policy, tuple, s, rho)?;
            let mut rng = stream(seed, Role::Diagnostic, i as u64);
            let (estimate, std_error, accepted) =
                psi_monte_carlo(policy, tuple, s, rho, samples, &mut rng)?;
            Ok(PsiEstimate {
                tuple,
                phi,
                closed_form,
                estimate,
                std_error,
                accepted,
                bound: phi * factor,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: f64, b: f64) -> ChannelParams {
        ChannelParams::new(a, b).unwrap()
    }

    fn policy_at(a: f64, b: f64) -> QPolicy {
        build_policy(&params(a, b)).unwrap()
    }

    #[test]
    fn init_splits_the_straddler() {
        let set = IntervalSet::init(3, 0.5);
        // Three messages of mass 1/3; message 2 straddles 0.5 and is split,
        // the new piece taking id 4.
        let expect = [
            (1u64, 1u64, 1.0 / 3.0, 0u8),
            (2, 2, 0.5 - 1.0 / 3.0, 0),
            (3, 3, 1.0 / 3.0, 1),
            (4, 2, 2.0 / 3.0 - 0.5, 1),
        ];
        assert_eq!(set.intervals.len(), 4);
        for (iv, &(index, message, length, class)) in set.intervals.iter().zip(expect.iter()) {
            assert_eq!(iv.index, index);
            assert_eq!(iv.message, message);
            assert!((iv.length - length).abs() < 1e-15);
            assert_eq!(iv.history_bit, class);
        }
        // Canonical tiling: previous-0 intervals first, running-sum lefts.
        assert!((set.class_zero_mass() - 0.5).abs() < 1e-15);
        assert!((set.intervals[1].left - 1.0 / 3.0).abs() < 1e-15);
        assert!((set.intervals[2].left - 0.5).abs() < 1e-15);
        assert!((set.total_mass() - 1.0).abs() < 1e-15);
        for m in 1..=3 {
            assert!((set.message_posterior(m) - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn init_with_aligned_boundary_does_not_split() {
        let set = IntervalSet::init(2, 0.5);
        assert_eq!(set.intervals.len(), 2);
        assert_eq!(set.intervals[0].history_bit, 0);
        assert_eq!(set.intervals[1].history_bit, 1);
    }

    #[test]
    fn advance_without_shift_splits_only_at_the_transmit_boundary() {
        let policy = policy_at(0.25, 0.25);
        let q: Node = 3;
        let p1 = policy.joint_x_xprev(1, 0, q);
        let p2 = policy.x_prev_zero_prob(q);
        assert!(p1 < p2, "node 3 has a genuine interior boundary");

        // Two previous-0 intervals tiling [0, p2), plus one previous-1.
        let mut set = IntervalSet {
            intervals: vec![
                MessageInterval {
                    index: 1,
                    message: 1,
                    length: p1,
                    left: 0.0,
                    history_bit: 0,
                },
                MessageInterval {
                    index: 2,
                    message: 2,
                    length: p2 - p1,
                    left: p1,
                    history_bit: 0,
                },
                MessageInterval {
                    index: 3,
                    message: 3,
                    length: 1.0 - p2,
                    left: p2,
                    history_bit: 1,
                },
            ],
            next_index: 4,
        };
        let records = set.advance(&policy, q, 0.0);
        // With u = 0 nothing moves: interval 1 sits exactly on [0, p1) and
        // is labeled 1; interval 2 on [p1, p2) labeled 0; interval 3 passes
        // through labeled 0.
        assert_eq!(records.len(), 3);
        assert_eq!(records[0].children, vec![(1, p1, 1)]);
        assert_eq!(records[1].children.len(), 1);
        assert_eq!(records[1].children[0].2, 0);
        assert_eq!(records[2].children, vec![(3, 1.0 - p2, 0)]);
        let total: f64 = set.total_mass();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn advance_with_wrap_produces_three_children_and_fresh_ids() {
        let policy = policy_at(0.25, 0.25);
        let q: Node = 3;
        let p1 = policy.joint_x_xprev(1, 0, q);
        let p2 = policy.x_prev_zero_prob(q);
        let s = p2 * 0.9;
        let mut set = IntervalSet {
            intervals: vec![
                MessageInterval {
                    index: 1,
                    message: 1,
                    length: s,
                    left: 0.0,
                    history_bit: 0,
                },
                MessageInterval {
                    index: 2,
                    message: 2,
                    length: p2 - s,
                    left: s,
                    history_bit: 0,
                },
                MessageInterval {
                    index: 3,
                    message: 3,
                    length: 1.0 - p2,
                    left: p2,
                    history_bit: 1,
                },
            ],
            next_index: 4,
        };
        // Shift so interval 1 starts inside [p1, p2): it then covers the
        // wrap and the transmit boundary, giving three pieces.
        let u = (p1 + 0.25 * (p2 - p1)) / p2;
        let records = set.advance(&policy, q, u);
        let children = &records[0].children;
        assert_eq!(children.len(), 3);
        assert_eq!(children[0].0, 1, "first piece keeps the parent id");
        assert_eq!(children[1].0, 4, "later pieces take fresh ids in order");
        assert_eq!(children[2].0, 5);
        assert_eq!(
            children.iter().map(|c| c.2).collect::<Vec<_>>(),
            vec![0, 1, 0],
            "walk order: tail of the 0-region, wrap into the 1-region, past \
             the boundary into the 0-region"
        );
        let total: f64 = children.iter().map(|c| c.1).sum();
        assert!((total - s).abs() < 1e-15, "splitting conserves mass");
    }

    #[test]
    fn bayes_update_is_an_exact_posterior() {
        let p = params(0.25, 0.25);
        let policy = policy_at(0.25, 0.25);
        let q: Node = 2;
        let p2 = policy.x_prev_zero_prob(q);
        let mut set = IntervalSet::init(4, p2);
        set.advance(&policy, q, 0.0);
        let y: Bit = 1;
        let out = policy.output_prob(q, y);
        let before: Vec<f64> = set.intervals.iter().map(|iv| iv.length).collect();
        let labels: Vec<Bit> = set.intervals.iter().map(|iv| iv.history_bit).collect();
        let total = set.bayes_update(&p, out, y).unwrap();
        assert!((total - 1.0).abs() < 1e-12);
        for ((iv, s), x) in set.intervals.iter().zip(before.iter()).zip(labels.iter()) {
            let expected = s * p.likelihood(y, *x) / out / total;
            assert!((iv.length - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn phase_plan_worked_example() {
        let policy = policy_at(0.25, 0.25);
        let s_min = policy.s_min();
        assert!((0.2..0.39).contains(&s_min), "s_min = {s_min}");
        let plan = phase_plan(800, s_min, 0.25).unwrap();
        assert_eq!(plan.position_bits, 12);
        assert_eq!(plan.repetition_len, 30, "capped at the half-horizon grid");
        assert_eq!(plan.phase1_steps, 800 - 1 - 12 * 30);
        // Small horizons shrink the repetition length to the floor.
        let short = phase_plan(100, s_min, 0.25).unwrap();
        assert_eq!(short.repetition_len, 2);
        assert!(phase_plan(10, s_min, 0.25).is_err());
    }

    #[test]
    fn majority_flip_probability_matches_hand_sums() {
        assert!((majority_flip_probability(1, 0.25) - 0.25).abs() < 1e-15);
        let m3 = 3.0 * 0.25_f64.powi(2) * 0.75 + 0.25_f64.powi(3);
        assert!((majority_flip_probability(3, 0.25) - m3).abs() < 1e-15);
        let m5 = 10.0 * 0.001 * 0.81 + 5.0 * 1e-4 * 0.9 + 1e-5;
        assert!((majority_flip_probability(5, 0.1) - m5).abs() < 1e-12);
        assert_eq!(majority_flip_probability(7, 0.0), 0.0);
        assert_eq!(majority_flip_probability(7, 1.0), 1.0);
    }

    #[test]
    fn run_is_deterministic() {
        let config = PmsConfig {
            params: params(0.25, 0.25),
            messages: 8,
            horizon: 120,
            seed: 42,
            trial: 3,
            list_threshold: None,
            record_trace: true,
        };
        let a = run_pms(&config).unwrap();
        let b = run_pms(&config).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn short_runs_keep_every_invariant() {
        for trial in 0..20 {
            let config = PmsConfig {
                params: params(0.25, 0.25),
                messages: 4,
                horizon: 80,
                seed: 7,
                trial,
                list_threshold: None,
                record_trace: false,
            };
            let r = run_pms(&config).unwrap();
            assert!(
                r.max_mass_drift < 1e-9,
                "trial {trial}: {}",
                r.max_mass_drift
            );
            assert!(
                r.max_partition_gap < 1e-9,
                "trial {trial}: {}",
                r.max_partition_gap
            );
            assert!(r.length_bound_ok, "trial {trial}");
            assert!(r.rll_ok, "trial {trial}");
        }
    }

    #[test]
    fn noiseless_transmission_decodes() {
        let config = PmsConfig {
            params: params(0.0, 0.0),
            messages: 8,
            horizon: 100,
            seed: 5,
            trial: 0,
            list_threshold: None,
            record_trace: false,
        };
        let r = run_pms(&config).unwrap();
        assert!(r.listed);
        assert!(r.success, "noiseless confirmation cannot flip bits");
        assert!(r.rll_ok);
    }

    #[test]
    fn batch_aggregates_and_is_order_independent() {
        let p = params(0.25, 0.25);
        let batch = run_pms_batch(&p, 4, 80, 16, 11).unwrap();
        assert_eq!(batch.runs.len(), 16);
        let errors = batch.runs.iter().filter(|r| !r.success).count();
        assert_eq!(batch.errors, errors);
        for (t, run) in batch.runs.iter().enumerate() {
            assert_eq!(run.trial, t as u64, "results keep trial order");
        }
        let again = run_pms_batch(&p, 4, 80, 16, 11).unwrap();
        assert_eq!(
            serde_json::to_string(&batch).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }

    #[test]
    fn there_are_twenty_admissible_tuples() {
        let policy = policy_at(0.25, 0.25);
        let tuples = psi_tuples(&policy);
        assert_eq!(tuples.len(), 20);
        // Previous-1 tuples always have input 0.
        assert!(tuples.iter().filter(|t| t.x_prev == 1).all(|t| t.x == 0));
    }

    #[test]
    fn moment_closed_form_matches_monte_carlo() {
        let policy = policy_at(0.25, 0.25);
        let s = policy.s_min();
        let rho = 0.5;
        for (i, tuple) in psi_tuples(&policy).into_iter().enumerate() {
            let cf = psi_closed_form(&policy, tuple, s, rho).unwrap();
            let mut rng = stream(3, Role::Diagnostic, i as u64);
            let (est, se, acc) = psi_monte_carlo(&policy, tuple, s, rho, 40_000, &mut rng).unwrap();
            assert!(acc > 1000, "{tuple:?}");
            assert!(
                (est - cf).abs() <= 3.0 * se.max(1e-12),
                "{tuple:?}: estimate {est} vs closed form {cf} (se {se})"
            );
        }
    }

    #[test]
    fn moment_bound_holds_with_equality_at_the_smallest_mass() {
        let policy = policy_at(0.25, 0.25);
        let s = policy.s_min();
        let rho = 0.3;
        let factor = psi_bound_factor(&policy, s, rho);
        let mut equality_seen = false;
        for tuple in psi_tuples(&policy) {
            let cf = psi_closed_form(&policy, tuple, s, rho).unwrap();
            let phi = phi_weight(&policy, tuple.q, tuple.x, tuple.q_next, rho).unwrap();
            assert!(cf <= phi * factor * (1.0 + 1e-12), "{tuple:?}");
            if tuple.x_prev == 0 {
                let p = policy.joint_x_xprev(tuple.x, 0, tuple.q);
                if (p - policy.s_min()).abs() < 1e-12 && phi > 0.0 {
                    assert!((cf - phi * factor).abs() < 1e-12 * phi);
                    equality_seen = true;
                }
            }
        }
        assert!(equality_seen, "the bound is tight somewhere");
    }

    #[test]
    fn psi_check_covers_every_tuple() {
        let policy = policy_at(0.25, 0.25);
        let s = policy.s_min();
        let rows = psi_check(&policy, s, 0.5, 5000, 1).unwrap();
        assert_eq!(rows.len(), 20);
        for row in &rows {
            assert!(row.closed_form <= row.bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn psi_inputs_are_validated() {
        let policy = policy_at(0.25, 0.25);
        let tuple = psi_tuples(&policy)[0];
        assert!(psi_closed_form(&policy, tuple, policy.s_min() * 2.0, 0.5).is_err());
        assert!(psi_closed_form(&policy, tuple, 0.1, 1.5).is_err());
    }
}
