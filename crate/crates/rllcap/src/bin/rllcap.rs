//! Command-line interface to the feedback-capacity toolkit.
//!
//! Every subcommand prints a human-readable summary by default, switches to
//! a full JSON report with `--json`, and writes row-shaped data as RFC-4180
//! CSV via `--out`. Exit status: 0 on success, 1 on invalid input or I/O
//! failure, 2 when independent methods disagree beyond tolerance (or a
//! zero-error scheme decodes incorrectly).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rllcap::harness::{
    asymptotic_report, bellman_check, capacity_report, dp_solve, pms_csv_rows, psi_csv_rows,
    psi_report, simulate_pms, simulate_schannel, sweep_zs, write_csv, write_json,
    METHOD_AGREEMENT_TOL,
};
use rllcap::Error;

#[derive(Parser)]
#[command(
    name = "rllcap",
    about = "Feedback capacity of the binary channel with a no-consecutive-ones input constraint",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute capacity by maximization, root-finding, and the graph policy.
    Capacity {
        /// Crossover probability P(Y=1 | X=0).
        #[arg(long)]
        alpha: f64,
        /// Crossover probability P(Y=0 | X=1).
        #[arg(long)]
        beta: f64,
        /// Emit the full report as JSON.
        #[arg(long)]
        json: bool,
        /// Write the output to this file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the symmetric, Z-, and S-channel families and cross-validate.
    SweepZs {
        /// Number of grid intervals per family.
        #[arg(long, default_value_t = 40)]
        grid: usize,
        /// Emit the full report as JSON instead of row CSV.
        #[arg(long)]
        json: bool,
        /// Write the output to this file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the average-reward dynamic program by value iteration.
    DpSolve {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        /// Number of grid points for the belief state.
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        /// Iteration cap.
        #[arg(long, default_value_t = 20000)]
        iters: usize,
        /// Span-seminorm convergence tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Emit the full report as JSON.
        #[arg(long)]
        json: bool,
        /// Write per-state rows as CSV to this file (or the JSON report
        /// with --json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify the closed-form solution of the Bellman equation on a grid.
    BellmanCheck {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        /// Number of grid points.
        #[arg(long, default_value_t = 10000)]
        grid: usize,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the posterior-matching transmission scheme.
    SimulatePms {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        /// Message-set size (wins over --rate; default 16 if neither given).
        #[arg(long)]
        messages: Option<u64>,
        /// Target rate in bits per channel use; the message set becomes
        /// 2^ceil(rate·n).
        #[arg(long)]
        rate: Option<f64>,
        /// Block length (total channel uses per transmission).
        #[arg(long)]
        n: usize,
        /// Number of independent trials.
        #[arg(long, default_value_t = 100)]
        trials: u64,
        /// Master seed; each trial derives its own streams.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit the full batch as JSON.
        #[arg(long)]
        json: bool,
        /// Write per-trial rows as CSV to this file (or the JSON batch
        /// with --json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the zero-error scheme for the channel with β = 0.
    SimulateSchannel {
        #[arg(long)]
        alpha: f64,
        /// Must be 0; the scheme is defined for the S-channel only.
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// Bits per constant-weight block.
        #[arg(long, default_value_t = 48)]
        n: usize,
        #[arg(long, default_value_t = 10000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
        /// Write per-trial rows as CSV to this file (or the JSON summary
        /// with --json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare exact capacity against its small-noise expansions.
    Asymptotic {
        /// Symmetric crossover probability.
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check closed-form moment weights against Monte Carlo and the bound.
    PsiCheck {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        /// Moment order, in [0, 1).
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        /// Monte Carlo samples per tuple.
        #[arg(long, default_value_t = 20000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
        /// Write per-tuple rows as CSV to this file (or the JSON report
        /// with --json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Capacity {
            alpha,
            beta,
            json,
            out,
        } => {
            let report = capacity_report(alpha, beta)?;
            if json {
                write_json(&report, out.as_deref())?;
            } else {
                if report.relabeled {
                    println!(
                        "parameters relabeled to (alpha, beta) = ({}, {})",
                        report.alpha, report.beta
                    );
                }
                println!("capacity (maximization) = {:.12} bits/use", report.capacity);
                println!(
                    "  argmax z = {:.12} in [{:.6}, {:.6}]",
                    report.z_opt, report.z_lower, report.z_upper
                );
                match report.capacity_root {
                    Some(c) => println!("capacity (root form)    = {c:.12} bits/use"),
                    None => {
                        println!("capacity (root form)    = n/a (singular at alpha + beta = 1)")
                    }
                }
                match report.capacity_graph {
                    Some(c) => println!("capacity (graph policy) = {c:.12} bits/use"),
                    None => println!("capacity (graph policy) = n/a (degenerate policy)"),
                }
                println!("max disagreement        = {:.3e}", report.max_disagreement);
            }
            Ok(verdict(
                report.agreement_ok,
                "methods disagree beyond tolerance",
            ))
        }
        Command::SweepZs { grid, json, out } => {
            let report = sweep_zs(grid)?;
            if json {
                write_json(&report, out.as_deref())?;
            } else {
                write_csv(&report.rows, out.as_deref())?;
            }
            Ok(verdict(
                report.agreement_ok,
                "family sweep disagrees beyond tolerance",
            ))
        }
        Command::DpSolve {
            alpha,
            beta,
            grid,
            iters,
            tol,
            json,
            out,
        } => {
            let report = dp_solve(alpha, beta, grid, iters, tol)?;
            if json {
                write_json(&report, out.as_deref())?;
            } else if let Some(path) = out {
                write_csv(&report.rows, Some(&path))?;
            } else {
                println!(
                    "value iteration on {} states (tol {:.1e})",
                    report.grid_size, report.tol
                );
                println!("  average reward rho = {:.12} bits/use", report.rho);
                println!("  closed form        = {:.12} bits/use", report.capacity);
                println!("  |rho - closed|     = {:.3e}", report.rho_gap);
                println!("  max |h - h_closed| = {:.3e}", report.max_h_gap);
            }
            Ok(verdict(
                report.agreement_ok,
                "value iteration disagrees with the closed form",
            ))
        }
        Command::BellmanCheck {
            alpha,
            beta,
            grid,
            json,
            out,
        } => {
            let report = bellman_check(alpha, beta, grid)?;
            if json {
                write_json(&report, out.as_deref())?;
            } else {
                println!("Bellman residual on {} states", report.grid_size);
                println!("  max residual      = {:.3e}", report.max_residual);
                println!("  action mismatches = {}", report.action_mismatches);
                println!("  capacity          = {:.12} bits/use", report.capacity);
            }
            Ok(verdict(
                report.pass,
                "closed form fails the Bellman equation",
            ))
        }
        Command::SimulatePms {
            alpha,
            beta,
            messages,
            rate,
            n,
            trials,
            seed,
            json,
            out,
        } => {
            let batch = simulate_pms(alpha, beta, messages, rate, n, trials, seed)?;
            if json {
                write_json(&batch, out.as_deref())?;
            } else if let Some(path) = out {
                write_csv(&pms_csv_rows(&batch), Some(&path))?;
            } else {
                println!(
                    "posterior matching: {} messages, n = {}, {} trials (seed {})",
                    batch.messages, batch.horizon, batch.trials, batch.seed
                );
                println!(
                    "  errors      = {} ({:.4} error rate)",
                    batch.errors, batch.error_rate
                );
                println!("  unlisted    = {}", batch.unlisted);
                println!("  mass drift  <= {:.3e}", batch.max_mass_drift);
                println!("  partition gap <= {:.3e}", batch.max_partition_gap);
                println!(
                    "  length bound: {}",
                    if batch.all_length_bounds_ok {
                        "ok"
                    } else {
                        "VIOLATED"
                    }
                );
                println!(
                    "  input constraint: {}",
                    if batch.all_rll_ok { "ok" } else { "VIOLATED" }
                );
            }
            let invariants_ok = batch.all_length_bounds_ok
                && batch.all_rll_ok
                && batch.max_mass_drift <= 1e-9
                && batch.max_partition_gap <= 1e-9;
            Ok(verdict(invariants_ok, "simulation invariants violated"))
        }
        Command::SimulateSchannel {
            alpha,
            beta,
            n,
            trials,
            seed,
            json,
            out,
        } => {
            if beta != 0.0 {
                return Err(Error::Config(format!(
                    "the zero-error scheme requires beta = 0, got {beta}"
                )));
            }
            let summary = simulate_schannel(alpha, n, trials, seed)?;
            if json {
                write_json(&summary, out.as_deref())?;
            } else if let Some(path) = out {
                write_csv(&summary.trials, Some(&path))?;
            } else {
                println!(
                    "zero-error scheme: alpha = {}, block {} bits (weight {}), {} trials",
                    summary.alpha,
                    summary.block_len,
                    summary.weight,
                    summary.trials.len()
                );
                println!("  decoding errors = {}", summary.errors);
                println!(
                    "  mean uses/block = {:.4} (expected {:.4})",
                    summary.mean_uses, summary.expected_uses
                );
                println!("  mean rate       = {:.6} bits/use", summary.mean_rate);
                println!(
                    "  shaped limit    = {:.6} bits/use at ones-fraction {:.6}",
                    summary.shaping.rate, summary.shaping.z_opt
                );
                println!("  capacity        = {:.6} bits/use", summary.capacity);
            }
            Ok(verdict(
                summary.errors == 0,
                "zero-error scheme decoded incorrectly",
            ))
        }
        Command::Asymptotic { alpha, json, out } => {
            let report = asymptotic_report(alpha)?;
            if json {
                write_json(&report, out.as_deref())?;
            } else {
                println!("alpha = {}", report.alpha);
                println!("  exact capacity        = {:.12} bits/use", report.capacity);
                println!(
                    "  feedback expansion    = {:.12} (residual {:.3e})",
                    report.feedback_expansion, report.feedback_residual
                );
                println!(
                    "  nonfeedback expansion = {:.12}",
                    report.nonfeedback_expansion
                );
                println!("  log2(golden ratio)    = {:.12}", report.log2_golden_ratio);
                println!(
                    "  alpha*log2(alpha) coefficients: feedback {:.10}, nonfeedback {:.10} (gap {:.10})",
                    report.feedback_alpha_log_coefficient,
                    report.nonfeedback_alpha_log_coefficient,
                    report.coefficient_gap
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::PsiCheck {
            alpha,
            beta,
            rho,
            trials,
            seed,
            json,
            out,
        } => {
            let report = psi_report(alpha, beta, rho, trials, seed)?;
            if json {
                write_json(&report, out.as_deref())?;
            } else if let Some(path) = out {
                write_csv(&psi_csv_rows(&report), Some(&path))?;
            } else {
                println!(
                    "moment weights at rho = {}, s = {:.6}: {} tuples, {} samples each",
                    report.rho,
                    report.s,
                    report.rows.len(),
                    report.samples
                );
                println!("  max |MC - closed|/SE = {:.3}", report.max_z_score);
                println!(
                    "  within 3 SE: {}",
                    if report.all_within_three_se {
                        "all"
                    } else {
                        "NOT ALL"
                    }
                );
                println!(
                    "  below bound: {}",
                    if report.all_below_bound {
                        "all"
                    } else {
                        "NOT ALL"
                    }
                );
            }
            // Monte Carlo verdicts are statistical; report them without
            // failing the invocation.
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Exit 0 when `ok`, otherwise print `msg` to stderr and exit 2.
fn verdict(ok: bool, msg: &str) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        eprintln!("FAIL: {msg} (tolerance {METHOD_AGREEMENT_TOL:.1e})");
        ExitCode::from(2)
    }
}
