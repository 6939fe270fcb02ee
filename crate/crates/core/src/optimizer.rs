//! Alternating driver: allocation block, then one trajectory step, repeated
//! until the exact objective stalls.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::allocation::{allocation_objective, solve_maxmin_allocation, solve_weighted_allocation, Allocation};
use crate::channel::{rate_matrix, Trajectory};
use crate::error::{Error, Result};
use crate::fairness::{check_condition1, fairness_metrics, FairnessFactor, FairnessMetrics};
use crate::matrix::Matrix;
use crate::scenario::Scenario;
use crate::trajectory::{initial_trajectory, solve_maxmin_trajectory_step, solve_trajectory_step, tight_slack};

pub const DEFAULT_EPS: f64 = 1e-4;
pub const DEFAULT_MAX_ROUNDS: usize = 50;
/// Duality-gap target handed to every block solve.
pub const SUBPROBLEM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `|V^r − V^{r−1}| ≤ ε`.
    Tolerance,
    IterLimit,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Tolerance => "tolerance",
            Termination::IterLimit => "iter_limit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub factor: FairnessFactor,
    /// `V⁰, …, V^R`, always the exact objective.
    pub objective_trace: Vec<f64>,
    pub allocation: Allocation,
    pub trajectory: Trajectory,
    /// `R_k[n]`, K×N.
    pub rates: Matrix,
    /// Time-averaged rate of each user.
    pub per_user_throughput: Vec<f64>,
    pub system_throughput: f64,
    pub fairness: FairnessMetrics,
    pub termination: Termination,
    /// `α·R_k[n] ≤ 1` held at every allocation iterate (always true in max-min mode).
    pub condition1_held: bool,
    pub iterations: usize,
    pub wall_time: Duration,
}

fn validate(eps: f64, max_rounds: usize) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be positive (got {eps})")));
    }
    if max_rounds == 0 {
        return Err(Error::InvalidArgument("max rounds must be at least 1".into()));
    }
    Ok(())
}

fn finish(
    scenario: &Scenario,
    factor: FairnessFactor,
    trace: Vec<f64>,
    allocation: Allocation,
    trajectory: Trajectory,
    termination: Termination,
    condition1_held: bool,
    started: Instant,
) -> SolveReport {
    let rates = rate_matrix(scenario, &trajectory, &allocation);
    let n = rates.cols() as f64;
    let per_user: Vec<f64> = (0..rates.rows()).map(|k| rates.row(k).iter().sum::<f64>() / n).collect();
    let system_throughput = allocation_objective(scenario, &trajectory, &allocation, factor);
    SolveReport {
        factor,
        iterations: trace.len() - 1,
        objective_trace: trace,
        fairness: fairness_metrics(&per_user),
        per_user_throughput: per_user,
        system_throughput,
        rates,
        allocation,
        trajectory,
        termination,
        condition1_held,
        wall_time: started.elapsed(),
    }
}

fn round_context(round: usize) -> impl Fn(Error) -> Error {
    move |e| e.with_context(&format!("round {round}"))
}

/// Alternating maximization of `(1/N) Σ_n H_α(R_·[n])`.
///
/// A block result that would lower the exact objective is discarded; with
/// Condition 1 in force this never triggers beyond round-off.
pub fn run_algorithm1(scenario: &Scenario, alpha: f64, eps: f64, max_rounds: usize) -> Result<SolveReport> {
    validate(eps, max_rounds)?;
    let FairnessFactor::Finite(alpha) = FairnessFactor::new(alpha)? else {
        return Err(Error::InvalidArgument("alpha must be finite; use the max-min driver".into()));
    };
    let factor = FairnessFactor::Finite(alpha);
    let started = Instant::now();
    let k = scenario.num_users();
    let (mut q, _) = initial_trajectory(scenario);
    let mut alloc = Allocation::uniform(k, scenario.num_slots(), 1.0 / (k + 1) as f64);
    let mut value = allocation_objective(scenario, &q, &alloc, factor);
    let mut trace = vec![value];
    let mut condition1 = true;
    let mut termination = Termination::IterLimit;

    for round in 1..=max_rounds {
        let ctx = round_context(round);
        let candidate = solve_weighted_allocation(scenario, &q, alpha, SUBPROBLEM_TOL).map_err(&ctx)?;
        let v = allocation_objective(scenario, &q, &candidate, factor);
        if v >= value {
            alloc = candidate;
            value = v;
        } else {
            log::debug!("round {round}: allocation block lowered the objective by {:e}", value - v);
        }
        let check = check_condition1(&rate_matrix(scenario, &q, &alloc), alpha);
        if !check.holds {
            condition1 = false;
        }

        let slack = tight_slack(scenario, &q);
        let step = solve_trajectory_step(scenario, &alloc, &q, &slack, alpha, SUBPROBLEM_TOL).map_err(&ctx)?;
        let v = allocation_objective(scenario, &step.trajectory, &alloc, factor);
        if v >= value {
            q = step.trajectory;
            value = v;
        } else {
            log::debug!("round {round}: trajectory block lowered the objective by {:e}", value - v);
        }

        let previous = *trace.last().unwrap();
        trace.push(value);
        log::info!("round {round}: V = {value:.9} (dV = {:e})", value - previous);
        if (value - previous).abs() <= eps {
            termination = Termination::Tolerance;
            break;
        }
    }

    let final_check = check_condition1(&rate_matrix(scenario, &q, &alloc), alpha);
    let condition1 = condition1 && final_check.holds;
    if !condition1 {
        log::warn!(
            "alpha = {alpha}: alpha*R exceeded 1 (final max {:.4}); concavity of the blocks is not certified",
            final_check.max_product
        );
    }
    Ok(finish(scenario, factor, trace, alloc, q, termination, condition1, started))
}

/// Alternating maximization of `(1/N) Σ_n min_k R_k[n]`.
///
/// After the loop the allocation is re-solved once on the final trajectory so
/// that the reported per-slot rates are equalized; that refresh is not part
/// of the objective trace.
pub fn run_maxmin(scenario: &Scenario, eps: f64, max_rounds: usize) -> Result<SolveReport> {
    validate(eps, max_rounds)?;
    let factor = FairnessFactor::MaxMin;
    let started = Instant::now();
    let k = scenario.num_users();
    let (mut q, _) = initial_trajectory(scenario);
    let mut alloc = Allocation::uniform(k, scenario.num_slots(), 1.0 / (k + 1) as f64);
    let mut value = allocation_objective(scenario, &q, &alloc, factor);
    let mut trace = vec![value];
    let mut termination = Termination::IterLimit;

    for round in 1..=max_rounds {
        let ctx = round_context(round);
        let candidate = solve_maxmin_allocation(scenario, &q, SUBPROBLEM_TOL).map_err(&ctx)?;
        let v = allocation_objective(scenario, &q, &candidate, factor);
        if v >= value {
            alloc = candidate;
            value = v;
        }

        let slack = tight_slack(scenario, &q);
        let step = solve_maxmin_trajectory_step(scenario, &alloc, &q, &slack, SUBPROBLEM_TOL).map_err(&ctx)?;
        let v = allocation_objective(scenario, &step.trajectory, &alloc, factor);
        if v >= value {
            q = step.trajectory;
            value = v;
        }

        let previous = *trace.last().unwrap();
        trace.push(value);
        log::info!("round {round}: V = {value:.9} (dV = {:e})", value - previous);
        if (value - previous).abs() <= eps {
            termination = Termination::Tolerance;
            break;
        }
    }

    let refreshed = solve_maxmin_allocation(scenario, &q, SUBPROBLEM_TOL).map_err(|e| e.with_context("final refresh"))?;
    if allocation_objective(scenario, &q, &refreshed, factor) >= value {
        alloc = refreshed;
    }
    Ok(finish(scenario, factor, trace, alloc, q, termination, true, started))
}

/// One entry of an `α` sweep.
#[derive(Debug)]
pub struct SweepEntry {
    pub factor: FairnessFactor,
    pub outcome: Result<SolveReport>,
}

/// Independent runs for every `α` (ascending, finite), plus a max-min run
/// when `include_maxmin` is set. Runs execute concurrently; a failed run is
/// recorded in its entry and does not stop the others.
pub fn alpha_sweep(
    scenario: &Scenario,
    alphas: &[f64],
    include_maxmin: bool,
    eps: f64,
    max_rounds: usize,
) -> Result<Vec<SweepEntry>> {
    validate(eps, max_rounds)?;
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one alpha".into()));
    }
    if alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::InvalidArgument("sweep alphas must be finite and >= 0".into()));
    }
    if alphas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("sweep alphas must be sorted ascending".into()));
    }
    let mut factors: Vec<FairnessFactor> = alphas.iter().map(|&a| FairnessFactor::Finite(a)).collect();
    if include_maxmin {
        factors.push(FairnessFactor::MaxMin);
    }
    Ok(factors
        .into_par_iter()
        .map(|factor| SweepEntry {
            factor,
            outcome: match factor {
                FairnessFactor::Finite(a) => run_algorithm1(scenario, a, eps, max_rounds),
                FairnessFactor::MaxMin => run_maxmin(scenario, eps, max_rounds),
            },
        })
        .collect())
}
