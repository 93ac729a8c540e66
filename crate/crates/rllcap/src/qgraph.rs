//! The capacity-achieving policy as a four-node output-driven graph.
//!
//! A node q ∈ {1,2,3,4} summarizes the entire output history: each received
//! bit moves the node through a fixed table, and the encoder's transmission
//! law depends only on (current node, previous input). The attraction of this
//! representation is that the posterior P(previous input = 0 | history)
//! takes exactly four values z₁ ≤ z₂ ≤ z₃ ≤ z₄, one per node, which makes
//! the stationary law and the achieved rate computable in closed form. The
//! conditional mutual information I(X; Y | Q) under the stationary law equals
//! the channel's feedback capacity, giving a third independent route to the
//! same number.

use serde::{Deserialize, Serialize};

use crate::analytic::capacity_by_maximization;
use crate::channel::{Bit, ChannelParams};
use crate::Error;

/// Graph nodes are 1-indexed.
pub type Node = u8;

pub const NODES: [Node; 4] = [1, 2, 3, 4];

/// The node-update table: next node after receiving output `y` at node `q`.
pub fn next_node(q: Node, y: Bit) -> Node {
    match (q, y) {
        (1, 0) => 4,
        (1, 1) => 2,
        (2, 0) => 3,
        (2, 1) => 1,
        (3, 0) => 3,
        (3, 1) => 1,
        (4, 0) => 3,
        (4, 1) => 1,
        _ => panic!("invalid node {q} or output {y}"),
    }
}

/// Folds the node-update table over an output sequence.
pub fn q_walk(q0: Node, outputs: &[Bit]) -> Node {
    outputs.iter().fold(q0, |q, &y| next_node(q, y))
}

/// The four per-node posteriors z_q = P(previous input 0 | node q).
///
/// z₂ is the rate-function maximizer; the other three are its images under
/// the Bayes updates that the graph's edges realize. Errors on channels where
/// the construction degenerates to 0/0 (the constant-output corners).
pub fn compute_z_values(params: &ChannelParams) -> Result<[f64; 4], Error> {
    let a = params.alpha();
    let ab = params.alpha_bar();
    let b = params.beta();
    let bb = params.beta_bar();
    let z2 = capacity_by_maximization(params).z_opt;
    let z2b = 1.0 - z2;

    let degenerate = |detail: &str| Error::DegeneratePolicy {
        alpha: a,
        beta: b,
        detail: detail.into(),
    };

    let d1 = a * z2b + bb * z2;
    if d1 <= 0.0 {
        return Err(degenerate("posterior after output 1 is 0/0"));
    }
    let z1 = a * z2b / d1;

    let d3 = ab * z2b + b * z2;
    if d3 <= 0.0 {
        return Err(degenerate("posterior after output 0 is 0/0"));
    }
    let z3 = ab * z2b / d3;

    let d4 = ab * bb * z2 + a * b * z2b;
    if d4 <= 0.0 {
        return Err(degenerate("two-step posterior is 0/0"));
    }
    let z4 = ab * bb * z2 / d4;

    Ok([z1, z2, z3, z4])
}

/// The graph policy: per-node posteriors, transmission law, stationary node
/// distribution, and the output statistics they induce.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QPolicy {
    /// z₁..z₄; `z[q-1]` is also P(previous input 0 | node q).
    pub z: [f64; 4],
    /// `transfer[q-1][x_prev][x]` = P(transmit x | previous input x_prev, node q).
    pub transfer: [[[f64; 2]; 2]; 4],
    /// Stationary node distribution.
    pub pi_q: [f64; 4],
    /// P(Y=1) under the stationary law (same at every node that transmits
    /// with marginal z₂).
    pub p: f64,
    /// αβ̄ / p, the stationary weight ratio between nodes 2 and 1.
    pub q_param: f64,
    params: ChannelParams,
}

/// Builds the policy for canonical channel parameters.
pub fn build_policy(params: &ChannelParams) -> Result<QPolicy, Error> {
    let z = compute_z_values(params)?;
    let [_, z2, z3, z4] = z;
    let mk_row = |ratio: f64| [[1.0 - ratio, ratio], [1.0, 0.0]];
    if z3 <= 0.0 || z4 <= 0.0 {
        return Err(Error::DegeneratePolicy {
            alpha: params.alpha(),
            beta: params.beta(),
            detail: format!("transfer ratio undefined (z3={z3}, z4={z4})"),
        });
    }
    let transfer = [
        [[0.0, 1.0], [1.0, 0.0]],
        [[0.0, 1.0], [1.0, 0.0]],
        mk_row(z2 / z3),
        mk_row(z2 / z4),
    ];
    for node in &transfer {
        for row in node {
            assert!(
                row[0] >= -1e-12 && row[0] <= 1.0 + 1e-12,
                "transfer row {row:?}"
            );
        }
    }

    let p = params.output_one_prob(z2);
    let q_param = if p > 0.0 {
        params.alpha() * params.beta_bar() / p
    } else {
        0.0
    };
    let pi_q = [
        p / (1.0 + p),
        p * q_param / (1.0 + p),
        (1.0 - p) / (1.0 + p),
        p * (1.0 - q_param) / (1.0 + p),
    ];

    Ok(QPolicy {
        z,
        transfer,
        pi_q,
        p,
        q_param,
        params: *params,
    })
}

impl QPolicy {
    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    /// P(previous input 0 | node q).
    pub fn x_prev_zero_prob(&self, q: Node) -> f64 {
        self.z[q as usize - 1]
    }

    /// Joint P(transmit x, previous input x_prev | node q).
    pub fn joint_x_xprev(&self, x: Bit, x_prev: Bit, q: Node) -> f64 {
        let zq = self.z[q as usize - 1];
        let mass = if x_prev == 0 { zq } else { 1.0 - zq };
        self.transfer[q as usize - 1][x_prev as usize][x as usize] * mass
    }

    /// P(transmit 1 | node q). Equals z₁ at node 1 and z₂ elsewhere.
    pub fn input_one_prob(&self, q: Node) -> f64 {
        self.joint_x_xprev(1, 0, q)
    }

    /// P(Y = y | node q) under the stationary law.
    pub fn output_prob(&self, q: Node, y: Bit) -> f64 {
        let p1 = self.params.output_one_prob(self.input_one_prob(q));
        if y == 1 {
            p1
        } else {
            1.0 - p1
        }
    }

    /// Smallest positive joint probability P(x, previous 0 | q) over all
    /// nodes and inputs. The interval codec uses it as the default list
    /// threshold and as the scale below which interval splits stay simple.
    pub fn s_min(&self) -> f64 {
        let mut m = f64::INFINITY;
        for q in NODES {
            for x in [0, 1] {
                let v = self.joint_x_xprev(x, 0, q);
                if v > 0.0 {
                    m = m.min(v);
                }
            }
        }
        m
    }

    /// Transition matrix of the chain on (node, previous input) pairs, with
    /// state index 2(q−1) + x_prev. Entry [s][s'] = P(s → s').
    pub fn chain_matrix(&self) -> [[f64; 8]; 8] {
        let mut m = [[0.0; 8]; 8];
        for q in NODES {
            for x_prev in [0u8, 1u8] {
                let s = 2 * (q as usize - 1) + x_prev as usize;
                for x in [0u8, 1u8] {
                    let px = self.transfer[q as usize - 1][x_prev as usize][x as usize];
                    if px == 0.0 {
                        continue;
                    }
                    for y in [0u8, 1u8] {
                        let py = self.params.likelihood(y, x);
                        if py == 0.0 {
                            continue;
                        }
                        let s_next = 2 * (next_node(q, y) as usize - 1) + x as usize;
                        m[s][s_next] += px * py;
                    }
                }
            }
        }
        m
    }

    /// The claimed stationary law on (node, previous input):
    /// π(q, x_prev=0) = π_Q(q)·z_q, π(q, x_prev=1) = π_Q(q)·(1−z_q).
    pub fn chain_stationary(&self) -> [f64; 8] {
        let mut pi = [0.0; 8];
        for q in NODES {
            let zq = self.z[q as usize - 1];
            pi[2 * (q as usize - 1)] = self.pi_q[q as usize - 1] * zq;
            pi[2 * (q as usize - 1) + 1] = self.pi_q[q as usize - 1] * (1.0 - zq);
        }
        pi
    }
}

/// Max-norm residual ‖πP − π‖∞ of the claimed stationary law under the
/// chain on (node, previous input).
pub fn stationary_check(policy: &QPolicy) -> f64 {
    let m = policy.chain_matrix();
    let pi = policy.chain_stationary();
    let mut residual = 0.0f64;
    for s_next in 0..8 {
        let mut acc = 0.0;
        for s in 0..8 {
            acc += pi[s] * m[s][s_next];
        }
        residual = residual.max((acc - pi[s_next]).abs());
    }
    residual
}

/// I(X; Y | Q) under the stationary law, by explicit summation over the
/// 4×2×2 joint table. Equals the feedback capacity.
pub fn conditional_mutual_information(policy: &QPolicy) -> f64 {
    let mut mi = 0.0;
    for q in NODES {
        let pq = policy.pi_q[q as usize - 1];
        if pq == 0.0 {
            continue;
        }
        let x1 = policy.input_one_prob(q);
        for x in [0u8, 1u8] {
            let px = if x == 1 { x1 } else { 1.0 - x1 };
            for y in [0u8, 1u8] {
                let joint = pq * px * policy.params().likelihood(y, x);
                if joint > 0.0 {
                    mi += joint
                        * (policy.params().likelihood(y, x) / policy.output_prob(q, y)).log2();
                }
            }
        }
    }
    mi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::golden_ratio;
    use crate::dp::state_transition;

    fn params(a: f64, b: f64) -> ChannelParams {
        ChannelParams::new(a, b).unwrap()
    }

    #[test]
    fn node_table_is_frozen() {
        let expected = [
            (1, 0, 4),
            (1, 1, 2),
            (2, 0, 3),
            (2, 1, 1),
            (3, 0, 3),
            (3, 1, 1),
            (4, 0, 3),
            (4, 1, 1),
        ];
        for (q, y, q_next) in expected {
            assert_eq!(next_node(q, y), q_next);
        }
    }

    #[test]
    fn every_node_reaches_every_node() {
        // Reachability closure over the table (outputs unconstrained).
        for start in NODES {
            let mut reach = [false; 5];
            let mut stack = vec![start];
            while let Some(q) = stack.pop() {
                if reach[q as usize] {
                    continue;
                }
                reach[q as usize] = true;
                stack.push(next_node(q, 0));
                stack.push(next_node(q, 1));
            }
            assert!(NODES.iter().all(|&q| reach[q as usize]), "from {start}");
        }
    }

    #[test]
    fn walk_folds_the_table() {
        assert_eq!(q_walk(1, &[]), 1);
        assert_eq!(q_walk(1, &[0]), 4);
        assert_eq!(q_walk(1, &[0, 1]), 1);
        assert_eq!(q_walk(2, &[0, 0, 1, 1]), 2);
    }

    #[test]
    fn z_values_are_ordered() {
        for &(a, b) in &[
            (0.25, 0.25),
            (0.1, 0.3),
            (0.02, 0.9),
            (0.0, 0.0),
            (0.0, 0.4),
            (0.3, 0.0),
        ] {
            let z = compute_z_values(&params(a, b)).unwrap();
            assert!(
                z[0] <= z[1] + 1e-12 && z[1] <= z[2] + 1e-12 && z[2] <= z[3] + 1e-12,
                "({a},{b}): {z:?}"
            );
        }
    }

    #[test]
    fn z_values_are_closed_under_posterior_updates() {
        // Applying the Bayes update for output y to the optimal action at
        // node q lands exactly on the z-value of the successor node.
        for &(a, b) in &[(0.25, 0.25), (0.1, 0.3), (0.02, 0.9)] {
            let p = params(a, b);
            let z = compute_z_values(&p).unwrap();
            let z2 = z[1];
            for q in NODES {
                let zq = z[q as usize - 1];
                let delta = zq.min(z2);
                for y in [0, 1] {
                    let next = state_transition(zq, delta, y, &p).unwrap();
                    let successor = z[next_node(q, y) as usize - 1];
                    assert!(
                        (next - successor).abs() < 1e-9,
                        "({a},{b}) node {q} output {y}: {next} vs {successor}"
                    );
                }
            }
        }
    }

    #[test]
    fn noiseless_z_values() {
        let z = compute_z_values(&params(0.0, 0.0)).unwrap();
        let inv_phi_sq = (3.0 - 5f64.sqrt()) / 2.0;
        assert!(z[0].abs() < 1e-9);
        assert!((z[1] - inv_phi_sq).abs() < 1e-6);
        assert!((z[2] - 1.0).abs() < 1e-9);
        assert!((z[3] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn corners_are_rejected() {
        assert!(build_policy(&params(0.0, 1.0)).is_err());
        assert!(build_policy(&params(1.0, 0.0)).is_err());
    }

    #[test]
    fn transfer_rows_are_stochastic() {
        let policy = build_policy(&params(0.25, 0.25)).unwrap();
        for node in &policy.transfer {
            for row in node {
                assert!((row[0] + row[1] - 1.0).abs() < 1e-12);
                assert!(row[0] >= 0.0 && row[1] >= 0.0);
            }
        }
        // After a 1 the policy always transmits 0.
        for node in &policy.transfer {
            assert_eq!(node[1], [1.0, 0.0]);
        }
    }

    #[test]
    fn stationary_law_sums_to_one_and_solves_pi_p() {
        for &(a, b) in &[
            (0.25, 0.25),
            (0.1, 0.3),
            (0.02, 0.9),
            (0.0, 0.4),
            (0.3, 0.0),
        ] {
            let policy = build_policy(&params(a, b)).unwrap();
            let total: f64 = policy.pi_q.iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "({a},{b})");
            assert!(stationary_check(&policy) < 1e-10, "({a},{b})");
        }
    }

    #[test]
    fn stationary_law_matches_power_iteration() {
        // Independent oracle: iterate the chain from uniform and compare.
        let policy = build_policy(&params(0.25, 0.25)).unwrap();
        let m = policy.chain_matrix();
        let mut pi = [1.0 / 8.0; 8];
        for _ in 0..10_000 {
            let mut next = [0.0; 8];
            for s in 0..8 {
                for t in 0..8 {
                    next[t] += pi[s] * m[s][t];
                }
            }
            pi = next;
        }
        let claimed = policy.chain_stationary();
        for s in 0..8 {
            assert!(
                (pi[s] - claimed[s]).abs() < 1e-9,
                "state {s}: {} vs {}",
                pi[s],
                claimed[s]
            );
        }
    }

    #[test]
    fn mutual_information_equals_capacity() {
        for &(a, b) in &[
            (0.25, 0.25),
            (0.1, 0.3),
            (0.02, 0.9),
            (0.0, 0.4),
            (0.3, 0.0),
        ] {
            let p = params(a, b);
            let policy = build_policy(&p).unwrap();
            let mi = conditional_mutual_information(&policy);
            let c = capacity_by_maximization(&p).capacity;
            assert!((mi - c).abs() < 1e-8, "({a},{b}): MI {mi} vs capacity {c}");
        }
    }

    #[test]
    fn noiseless_mutual_information_is_log_golden_ratio() {
        let policy = build_policy(&params(0.0, 0.0)).unwrap();
        let mi = conditional_mutual_information(&policy);
        assert!((mi - golden_ratio().log2()).abs() < 1e-9);
    }

    #[test]
    fn s_min_is_the_smallest_positive_joint_mass() {
        let policy = build_policy(&params(0.25, 0.25)).unwrap();
        let z = policy.z;
        // Direct enumeration: the positive joint masses are z₁ (node 1),
        // z₂ (nodes 2-4, x=1) and z₃−z₂, z₄−z₂ (nodes 3-4, x=0).
        let expected = [z[0], z[1], z[2] - z[1], z[3] - z[1]]
            .into_iter()
            .filter(|v| *v > 0.0)
            .fold(f64::INFINITY, f64::min);
        assert!((policy.s_min() - expected).abs() < 1e-12);
        assert!(policy.s_min() > 0.0);
    }

    #[test]
    fn policy_serializes_to_json_and_back() {
        let policy = build_policy(&params(0.25, 0.25)).unwrap();
        let text = serde_json::to_string(&policy).unwrap();
        let back: QPolicy = serde_json::from_str(&text).unwrap();
        assert_eq!(policy.z, back.z);
        assert_eq!(policy.pi_q, back.pi_q);
    }
}
