//! Reproducible experiment reports behind the `rllcap` binary.
//!
//! Every subcommand maps to a report builder here: a pure function from
//! validated inputs to a serializable report struct. The builders
//! cross-validate independent computations wherever two of them answer the
//! same question (closed-form maximization vs. root-finding vs. the graph
//! policy's mutual information; value iteration vs. the Bellman closed
//! form), and each report carries an explicit `agreement` verdict so the
//! caller can turn disagreement into a nonzero exit code.
//!
//! Output writers emit either RFC-4180 CSV (row-shaped reports) or
//! pretty-printed JSON (everything), to a file or standard output. All
//! floating-point serialization uses shortest-roundtrip formatting, so a
//! report produced from the same inputs and seed is byte-identical across
//! runs.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::{
    bsc_capacity, bsc_feedback_asymptotic, bsc_nonfeedback_asymptotic, capacity_by_maximization,
    capacity_by_root, feedback_alpha_coefficient, feedback_alpha_log_coefficient, golden_ratio,
    nonfeedback_alpha_log_coefficient, s_channel_capacity, z_bounds, z_channel_capacity,
};
use crate::channel::ChannelParams;
use crate::dp::{bellman_residual, dp_operator_with_actions, value_iteration, BellmanClosedForm};
use crate::pms::{
    psi_check, run_pms, run_pms_batch, PmsBatch, PmsConfig, PmsRunResult, PsiEstimate,
};
use crate::qgraph::{build_policy, conditional_mutual_information, stationary_check};
use crate::schannel::{run_schannel_scheme, SchannelSummary};
use crate::Error;

/// Independent capacity computations must agree to this tolerance.
pub const METHOD_AGREEMENT_TOL: f64 = 1e-6;

// ---------------------------------------------------------------------------
// capacity

/// Capacity of one channel by every applicable method.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacityReport {
    pub alpha_input: f64,
    pub beta_input: f64,
    /// Canonical parameters actually used (output relabeled when
    /// α + β > 1; the capacity is unchanged).
    pub alpha: f64,
    pub beta: f64,
    pub relabeled: bool,
    /// Capacity from the one-dimensional maximization.
    pub capacity: f64,
    pub z_opt: f64,
    pub z_lower: f64,
    pub z_upper: f64,
    /// Capacity from root-finding; absent on the singular line α + β = 1.
    pub capacity_root: Option<f64>,
    pub p_opt: Option<f64>,
    /// Conditional mutual information of the stationary graph policy;
    /// absent at the constant-output corners where the policy degenerates.
    pub capacity_graph: Option<f64>,
    /// Residual of the graph policy's stationary law, when it exists.
    pub stationary_residual: Option<f64>,
    pub max_disagreement: f64,
    pub agreement_ok: bool,
}

/// Computes the capacity by maximization, by root-finding, and through the
/// graph policy, and compares them.
pub fn capacity_report(alpha: f64, beta: f64) -> Result<CapacityReport, Error> {
    let (params, relabeled) = ChannelParams::canonical(alpha, beta)?;
    let max = capacity_by_maximization(&params);
    let (z_lower, z_upper) = z_bounds(&params);
    let root = capacity_by_root(&params).ok();
    let policy = build_policy(&params).ok();
    let capacity_graph = policy.as_ref().map(conditional_mutual_information);
    let stationary_residual = policy.as_ref().map(stationary_check);

    let mut max_disagreement = 0.0f64;
    if let Some(r) = &root {
        max_disagreement = max_disagreement.max((r.capacity - max.capacity).abs());
    }
    if let Some(g) = capacity_graph {
        max_disagreement = max_disagreement.max((g - max.capacity).abs());
    }
    Ok(CapacityReport {
        alpha_input: alpha,
        beta_input: beta,
        alpha: params.alpha(),
        beta: params.beta(),
        relabeled,
        capacity: max.capacity,
        z_opt: max.z_opt,
        z_lower,
        z_upper,
        capacity_root: root.as_ref().map(|r| r.capacity),
        p_opt: root.as_ref().map(|r| r.p_opt),
        capacity_graph,
        stationary_residual,
        max_disagreement,
        agreement_ok: max_disagreement <= METHOD_AGREEMENT_TOL,
    })
}

// ---------------------------------------------------------------------------
// sweep-zs

/// One row of the special-family sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    /// "bsc", "z", or "s".
    pub family: String,
    pub alpha: f64,
    pub beta: f64,
    /// The family's own closed form.
    pub capacity: f64,
    /// The general maximization evaluated at the same parameters.
    pub general: f64,
    /// The graph policy's conditional mutual information.
    pub graph: Option<f64>,
    pub z_opt: f64,
    pub max_disagreement: f64,
}

/// Capacity across the symmetric, Z-, and S-channel families.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub grid: usize,
    pub rows: Vec<SweepRow>,
    pub max_disagreement: f64,
    pub agreement_ok: bool,
}

/// Sweeps the three one-parameter families on `grid`+1 evenly spaced points
/// each, comparing the specialized closed forms against the general
/// maximization and the graph policy.
pub fn sweep_zs(grid: usize) -> Result<SweepReport, Error> {
    if grid < 2 {
        return Err(Error::Config(format!(
            "grid must be at least 2, got {grid}"
        )));
    }
    let mut rows = Vec::with_capacity(3 * (grid + 1));
    for i in 0..=grid {
        let frac = i as f64 / grid as f64;

        // Symmetric channel: α = β ∈ [0, 1/2].
        let a = 0.5 * frac;
        rows.push(sweep_row("bsc", a, a, bsc_capacity(a)?)?);

        // Z-channel: α = 0, β ∈ [0, 1); β = 1 is the constant-output corner.
        let b = frac * (grid - 1) as f64 / grid as f64;
        rows.push(sweep_row("z", 0.0, b, z_channel_capacity(b)?)?);

        // S-channel: β = 0, α ∈ [0, 1).
        rows.push(sweep_row("s", b, 0.0, s_channel_capacity(b)?)?);
    }
    let max_disagreement = rows.iter().map(|r| r.max_disagreement).fold(0.0, f64::max);
    Ok(SweepReport {
        grid,
        rows,
        max_disagreement,
        agreement_ok: max_disagreement <= METHOD_AGREEMENT_TOL,
    })
}

fn sweep_row(
    family: &str,
    alpha: f64,
    beta: f64,
    specialized: crate::analytic::CapacityResult,
) -> Result<SweepRow, Error> {
    let params = ChannelParams::new(alpha, beta)?;
    let general = capacity_by_maximization(&params);
    let graph = build_policy(&params)
        .ok()
        .map(|p| conditional_mutual_information(&p));
    let mut dis = (specialized.capacity - general.capacity).abs();
    if let Some(g) = graph {
        dis = dis.max((g - general.capacity).abs());
    }
    Ok(SweepRow {
        family: family.to_string(),
        alpha,
        beta,
        capacity: specialized.capacity,
        general: general.capacity,
        graph,
        z_opt: general.z_opt,
        max_disagreement: dis,
    })
}

// ---------------------------------------------------------------------------
// dp-solve

/// One grid state of the solved dynamic program.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DpRow {
    pub z: f64,
    /// Relative value from iteration, normalized to h(1) = 0.
    pub h: f64,
    /// Closed-form relative value under the same normalization.
    pub h_closed: f64,
    /// Maximizing action found by the operator.
    pub action: f64,
    /// Closed-form optimal action min(z, z₂).
    pub action_closed: f64,
}

/// Value iteration next to the closed-form solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DpSolveReport {
    pub alpha: f64,
    pub beta: f64,
    pub relabeled: bool,
    pub grid_size: usize,
    pub tol: f64,
    pub max_iters: usize,
    /// Average reward from relative value iteration.
    pub rho: f64,
    /// Capacity from the closed form.
    pub capacity: f64,
    pub rho_gap: f64,
    /// Largest |h − h_closed| across the grid.
    pub max_h_gap: f64,
    pub agreement_ok: bool,
    pub rows: Vec<DpRow>,
}

/// Solves the average-reward dynamic program by relative value iteration and
/// lines the result up against the closed-form bias and policy.
pub fn dp_solve(
    alpha: f64,
    beta: f64,
    grid_size: usize,
    max_iters: usize,
    tol: f64,
) -> Result<DpSolveReport, Error> {
    let (params, relabeled) = ChannelParams::canonical(alpha, beta)?;
    let vf = value_iteration(&params, grid_size, max_iters, tol)?;
    let (_, actions) = dp_operator_with_actions(&vf, &params);
    let closed = BellmanClosedForm::new(&params)?;
    let h1 = closed.h(1.0);

    let mut rows = Vec::with_capacity(vf.grid.len());
    let mut max_h_gap = 0.0f64;
    for (i, &z) in vf.grid.iter().enumerate() {
        let h = vf.values[i];
        let h_closed = closed.h(z) - h1;
        max_h_gap = max_h_gap.max((h - h_closed).abs());
        rows.push(DpRow {
            z,
            h,
            h_closed,
            action: actions[i],
            action_closed: closed.optimal_action(z),
        });
    }
    let rho_gap = (vf.rho - closed.rho()).abs();
    Ok(DpSolveReport {
        alpha: params.alpha(),
        beta: params.beta(),
        relabeled,
        grid_size,
        tol,
        max_iters,
        rho: vf.rho,
        capacity: closed.rho(),
        rho_gap,
        max_h_gap,
        // Value iteration on a finite grid carries discretization error, so
        // its agreement budget is looser than the analytic cross-checks.
        agreement_ok: rho_gap <= 2e-4,
        rows,
    })
}

// ---------------------------------------------------------------------------
// bellman-check

/// Residual of the closed-form solution under the Bellman operator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BellmanCheckReport {
    pub alpha: f64,
    pub beta: f64,
    pub relabeled: bool,
    pub grid_size: usize,
    pub max_residual: f64,
    pub action_mismatches: usize,
    pub capacity: f64,
    pub pass: bool,
}

/// Verifies that the closed-form bias satisfies the Bellman equation on a
/// dense grid of states.
pub fn bellman_check(alpha: f64, beta: f64, grid_size: usize) -> Result<BellmanCheckReport, Error> {
    let (params, relabeled) = ChannelParams::canonical(alpha, beta)?;
    let report = bellman_residual(&params, grid_size)?;
    let closed = BellmanClosedForm::new(&params)?;
    Ok(BellmanCheckReport {
        alpha: params.alpha(),
        beta: params.beta(),
        relabeled,
        grid_size: report.grid_size,
        max_residual: report.max_residual,
        action_mismatches: report.action_mismatches,
        capacity: closed.rho(),
        pass: report.max_residual <= METHOD_AGREEMENT_TOL && report.action_mismatches == 0,
    })
}

// ---------------------------------------------------------------------------
// simulate-pms

/// Flat per-trial row for CSV output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PmsCsvRow {
    pub trial: u64,
    pub seed: u64,
    pub true_message: u64,
    pub decoded_message: Option<u64>,
    pub success: bool,
    pub listed: bool,
    pub list_len: usize,
    pub list_position: Option<usize>,
    pub final_true_posterior: f64,
    pub interval_count: usize,
    pub phase1_steps: usize,
    pub max_mass_drift: f64,
    pub max_partition_gap: f64,
}

/// Runs seeded posterior-matching transmissions. `messages` wins when both
/// it and `rate` are given; with only `rate`, the message count is
/// 2^⌈rate·n⌉.
pub fn simulate_pms(
    alpha: f64,
    beta: f64,
    messages: Option<u64>,
    rate: Option<f64>,
    horizon: usize,
    trials: u64,
    seed: u64,
) -> Result<PmsBatch, Error> {
    let params = ChannelParams::new(alpha, beta)?;
    let messages = match (messages, rate) {
        (Some(m), _) => m,
        (None, Some(r)) => {
            if !(r > 0.0) {
                return Err(Error::Config(format!("rate must be positive, got {r}")));
            }
            let bits = (r * horizon as f64).ceil();
            if bits > 20.0 {
                return Err(Error::Config(format!(
                    "rate {r} at horizon {horizon} asks for 2^{bits} messages; \
                     pass --messages explicitly for large message sets"
                )));
            }
            (1u64 << bits as u32).max(2)
        }
        (None, None) => 16,
    };
    run_pms_batch(&params, messages, horizon, trials, seed)
}

/// One fully traced transmission (trial 0 of the seed).
pub fn simulate_pms_traced(
    alpha: f64,
    beta: f64,
    messages: u64,
    horizon: usize,
    seed: u64,
) -> Result<PmsRunResult, Error> {
    let params = ChannelParams::new(alpha, beta)?;
    run_pms(&PmsConfig {
        params,
        messages,
        horizon,
        seed,
        trial: 0,
        list_threshold: None,
        record_trace: true,
    })
}

/// Flattens a batch into CSV rows, one per trial.
pub fn pms_csv_rows(batch: &PmsBatch) -> Vec<PmsCsvRow> {
    batch
        .runs
        .iter()
        .map(|r| PmsCsvRow {
            trial: r.trial,
            seed: r.seed,
            true_message: r.true_message,
            decoded_message: r.decoded_message,
            success: r.success,
            listed: r.listed,
            list_len: r.list.len(),
            list_position: r.list_position,
            final_true_posterior: r.final_true_posterior,
            interval_count: r.interval_count,
            phase1_steps: r.phase1_steps,
            max_mass_drift: r.max_mass_drift,
            max_partition_gap: r.max_partition_gap,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// simulate-schannel

/// Runs the zero-error S-channel scheme (β is fixed at 0).
pub fn simulate_schannel(
    alpha: f64,
    block_len: usize,
    trials: u64,
    seed: u64,
) -> Result<SchannelSummary, Error> {
    let params = ChannelParams::s_channel(alpha)?;
    run_schannel_scheme(&params, block_len, trials, seed)
}

// ---------------------------------------------------------------------------
// asymptotic

/// Small-noise behavior of the symmetric channel's capacity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub alpha: f64,
    /// Exact symmetric-channel feedback capacity at this α.
    pub capacity: f64,
    /// log₂ φ + c₁·α·log₂α + c₂·α with the feedback coefficients.
    pub feedback_expansion: f64,
    pub feedback_residual: f64,
    /// log₂ φ + c̃₁·α·log₂α, the leading nonfeedback behavior.
    pub nonfeedback_expansion: f64,
    pub log2_golden_ratio: f64,
    /// c₁ = (2−φ)/(3−φ).
    pub feedback_alpha_log_coefficient: f64,
    /// c̃₁ = (2φ+2)/(4φ+3).
    pub nonfeedback_alpha_log_coefficient: f64,
    /// c̃₁ − c₁ > 0: feedback strictly improves the α·log₂α term.
    pub coefficient_gap: f64,
    pub feedback_alpha_coefficient: f64,
}

/// Evaluates the exact capacity and both expansions at one noise level.
pub fn asymptotic_report(alpha: f64) -> Result<AsymptoticReport, Error> {
    let capacity = bsc_capacity(alpha)?.capacity;
    let feedback_expansion = bsc_feedback_asymptotic(alpha);
    Ok(AsymptoticReport {
        alpha,
        capacity,
        feedback_expansion,
        feedback_residual: capacity - feedback_expansion,
        nonfeedback_expansion: bsc_nonfeedback_asymptotic(alpha),
        log2_golden_ratio: golden_ratio().log2(),
        feedback_alpha_log_coefficient: feedback_alpha_log_coefficient(),
        nonfeedback_alpha_log_coefficient: nonfeedback_alpha_log_coefficient(),
        coefficient_gap: nonfeedback_alpha_log_coefficient() - feedback_alpha_log_coefficient(),
        feedback_alpha_coefficient: feedback_alpha_coefficient(),
    })
}

// ---------------------------------------------------------------------------
// psi-check

/// Flat per-tuple row for CSV output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsiCsvRow {
    pub q: u8,
    pub x_prev: u8,
    pub x: u8,
    pub q_next: u8,
    pub phi: f64,
    pub closed_form: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub accepted: usize,
    pub bound: f64,
}

/// Moment weights of every admissible tuple: closed form vs. Monte Carlo
/// vs. the uniform bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsiReport {
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    /// Interval length used (the smallest positive per-node joint mass).
    pub s: f64,
    pub samples: usize,
    pub seed: u64,
    pub rows: Vec<PsiEstimate>,
    pub max_z_score: f64,
    pub all_within_three_se: bool,
    pub all_below_bound: bool,
}

/// Builds the moment-weight report at s = smallest positive joint mass.
pub fn psi_report(
    alpha: f64,
    beta: f64,
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<PsiReport, Error> {
    let (params, _) = ChannelParams::canonical(alpha, beta)?;
    let policy = build_policy(&params)?;
    let s = policy.s_min();
    let rows = psi_check(&policy, s, rho, samples, seed)?;
    let mut max_z = 0.0f64;
    let mut within = true;
    let mut below = true;
    for row in &rows {
        let gap = (row.estimate - row.closed_form).abs();
        if row.std_error > 0.0 {
            max_z = max_z.max(gap / row.std_error);
            if gap > 3.0 * row.std_error {
                within = false;
            }
        } else if gap > 1e-12 {
            within = false;
        }
        if row.closed_form > row.bound * (1.0 + 1e-12) {
            below = false;
        }
    }
    Ok(PsiReport {
        alpha: params.alpha(),
        beta: params.beta(),
        rho,
        s,
        samples,
        seed,
        rows,
        max_z_score: max_z,
        all_within_three_se: within,
        all_below_bound: below,
    })
}

/// Flattens the report for CSV output.
pub fn psi_csv_rows(report: &PsiReport) -> Vec<PsiCsvRow> {
    report
        .rows
        .iter()
        .map(|r| PsiCsvRow {
            q: r.tuple.q,
            x_prev: r.tuple.x_prev,
            x: r.tuple.x,
            q_next: r.tuple.q_next,
            phi: r.phi,
            closed_form: r.closed_form,
            estimate: r.estimate,
            std_error: r.std_error,
            accepted: r.accepted,
            bound: r.bound,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// output

/// Writes rows as RFC-4180 CSV with a header, to `out` or standard output.
pub fn write_csv<T: Serialize>(rows: &[T], out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => {
            let mut w = csv::Writer::from_path(path)?;
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        None => {
            let mut w = csv::Writer::from_writer(io::stdout());
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Writes a report as pretty-printed JSON, to `out` or standard output.
pub fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            io::Write::write_all(&mut io::stdout(), text.as_bytes())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_report_cross_validates() {
        let r = capacity_report(0.25, 0.25).unwrap();
        assert!(r.agreement_ok, "disagreement {}", r.max_disagreement);
        assert!(r.capacity_root.is_some());
        assert!(r.capacity_graph.is_some());
        assert!(!r.relabeled);
    }

    #[test]
    fn capacity_report_relabels_flipped_parameters() {
        let flipped = capacity_report(0.9, 0.8).unwrap();
        let canonical = capacity_report(0.1, 0.2).unwrap();
        assert!(flipped.relabeled);
        assert!((flipped.capacity - canonical.capacity).abs() < 1e-12);
        assert!((flipped.alpha - 0.1).abs() < 1e-15);
        assert!((flipped.beta - 0.2).abs() < 1e-15);
    }

    #[test]
    fn capacity_report_survives_the_singular_line() {
        let r = capacity_report(0.3, 0.7).unwrap();
        assert!(r.capacity_root.is_none(), "root form is singular there");
        assert!(r.capacity.abs() < 1e-9, "zero capacity on α+β=1");
    }

    #[test]
    fn sweep_agrees_across_families() {
        let report = sweep_zs(10).unwrap();
        assert_eq!(report.rows.len(), 33);
        assert!(report.agreement_ok, "max {}", report.max_disagreement);
    }

    #[test]
    fn dp_solve_matches_closed_form() {
        let report = dp_solve(0.25, 0.25, 400, 4000, 1e-7).unwrap();
        assert!(report.agreement_ok, "rho gap {}", report.rho_gap);
        assert!(report.max_h_gap < 1e-2, "h gap {}", report.max_h_gap);
        assert_eq!(report.rows.len(), 400);
    }

    #[test]
    fn bellman_check_passes_on_a_dense_grid() {
        let report = bellman_check(0.25, 0.25, 2000).unwrap();
        assert!(report.pass, "residual {}", report.max_residual);
    }

    #[test]
    fn pms_csv_rows_match_the_batch() {
        let batch = simulate_pms(0.25, 0.25, Some(4), None, 80, 8, 1).unwrap();
        let rows = pms_csv_rows(&batch);
        assert_eq!(rows.len(), 8);
        assert_eq!(rows.iter().filter(|r| !r.success).count(), batch.errors);
    }

    #[test]
    fn rate_flag_sets_the_message_count() {
        let batch = simulate_pms(0.25, 0.25, None, Some(0.05), 80, 2, 1).unwrap();
        assert_eq!(batch.messages, 16, "2^ceil(0.05·80)");
        assert!(simulate_pms(0.25, 0.25, None, Some(1.0), 80, 1, 1).is_err());
    }

    #[test]
    fn asymptotic_report_is_consistent() {
        let r = asymptotic_report(1e-3).unwrap();
        assert!(r.coefficient_gap > 0.0);
        assert!((r.capacity - r.feedback_expansion).abs() < 5e-4);
    }

    #[test]
    fn psi_report_verdicts_hold_on_a_fixed_seed() {
        let r = psi_report(0.25, 0.25, 0.5, 20_000, 2).unwrap();
        assert_eq!(r.rows.len(), 20);
        assert!(r.all_within_three_se, "max z {}", r.max_z_score);
        assert!(r.all_below_bound);
    }

    #[test]
    fn csv_output_is_rfc4180_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let report = sweep_zs(4).unwrap();
        write_csv(&report.rows, Some(&path)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "family,alpha,beta,capacity,general,graph,z_opt,max_disagreement"
        );
        assert_eq!(text.lines().count(), 1 + report.rows.len());
        // RFC 4180: CRLF or LF rows, no dangling separators; csv defaults to
        // LF and only quotes when needed, which RFC 4180 readers accept.
        assert!(!text.contains(",\n,"));
    }

    #[test]
    fn json_output_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        let report = capacity_report(0.1, 0.2).unwrap();
        write_json(&report, Some(&path)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let back: CapacityReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.capacity, report.capacity);
    }
}
