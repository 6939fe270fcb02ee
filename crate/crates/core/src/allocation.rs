//! Bandwidth/power subproblems for a fixed trajectory.
//!
//! Both problems separate over slots: the budgets couple users within a slot
//! only, and the objective is a sum over slots. Each slot is one
//! [`convex_core::maximize`] call over `(b_1..b_K, p_1..p_K[, η])`.

use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::channel::{rate, rate_derivatives, rates_from_gains, RateContext, Trajectory};
use crate::convex_core::{maximize, SmoothProgram, SolverStatus, SymBand};
use crate::error::{Error, Result};
use crate::fairness::{min_component, weighted_sum, weighted_sum_derivatives, FairnessFactor};
use crate::matrix::Matrix;
use crate::scenario::Scenario;

/// Fractions below this are treated as zero after a solve.
pub const B_FLOOR: f64 = 1e-9;

/// Newton iteration cap for one per-slot solve.
const SLOT_MAX_ITER: usize = 2000;

/// Bandwidth and power fractions, both K×N.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    bandwidth: Matrix,
    power: Matrix,
}

impl Allocation {
    pub fn new(bandwidth: Matrix, power: Matrix) -> Result<Self> {
        if bandwidth.rows() != power.rows() || bandwidth.cols() != power.cols() {
            return Err(Error::InvalidArgument(
                "bandwidth and power matrices differ in shape".into(),
            ));
        }
        Ok(Self { bandwidth, power })
    }

    /// Every entry set to `fraction`.
    pub fn uniform(users: usize, slots: usize, fraction: f64) -> Self {
        Self {
            bandwidth: Matrix::filled(users, slots, fraction),
            power: Matrix::filled(users, slots, fraction),
        }
    }

    pub fn zeros(users: usize, slots: usize) -> Self {
        Self::uniform(users, slots, 0.0)
    }

    pub fn bandwidth(&self) -> &Matrix {
        &self.bandwidth
    }

    pub fn power(&self) -> &Matrix {
        &self.power
    }

    pub fn num_users(&self) -> usize {
        self.bandwidth.rows()
    }

    pub fn num_slots(&self) -> usize {
        self.bandwidth.cols()
    }

    /// Largest violation of the budget and box constraints.
    pub fn max_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in [&self.bandwidth, &self.power] {
            for n in 0..m.cols() {
                let col = m.column(n);
                worst = worst.max(col.iter().sum::<f64>() - 1.0);
                for v in col {
                    worst = worst.max(-v).max(v - 1.0);
                }
            }
        }
        worst
    }

    pub fn is_feasible(&self) -> bool {
        self.max_violation() <= 1e-9
    }
}

/// Per-slot weighted problem: maximize `H_α(R_1, …, R_K)`.
pub(crate) struct WeightedSlot<'a> {
    pub gains: &'a [f64],
    pub alpha: f64,
}

impl WeightedSlot<'_> {
    fn k(&self) -> usize {
        self.gains.len()
    }

    fn rates(&self, z: &[f64]) -> Vec<f64> {
        let k = self.k();
        (0..k).map(|i| rate(z[i], z[k + i], self.gains[i])).collect()
    }
}

impl SmoothProgram for WeightedSlot<'_> {
    fn dim(&self) -> usize {
        2 * self.k()
    }

    fn start(&self) -> Vec<f64> {
        vec![1.0 / (self.k() + 1) as f64; 2 * self.k()]
    }

    fn objective(&self, z: &[f64]) -> f64 {
        weighted_sum(&self.rates(z), self.alpha)
    }

    fn objective_gradient(&self, z: &[f64], grad: &mut [f64]) {
        let k = self.k();
        let rates = self.rates(z);
        let (_, g, _) = weighted_sum_derivatives(&rates, self.alpha);
        for i in 0..k {
            let (_, d, _) = rate_derivatives(z[i], z[k + i], self.gains[i]);
            grad[i] = g[i] * d[0];
            grad[k + i] = g[i] * d[1];
        }
    }

    fn objective_hessian(&self, z: &[f64], scale: f64, hess: &mut SymBand) {
        let k = self.k();
        let rates = self.rates(z);
        let (_, g, h) = weighted_sum_derivatives(&rates, self.alpha);
        let derivs: Vec<_> = (0..k)
            .map(|i| rate_derivatives(z[i], z[k + i], self.gains[i]))
            .collect();
        // Jᵀ ∇²H J, lower triangle only
        for i in 0..k {
            for l in 0..=i {
                let hil = h[i * k + l] * scale;
                let (di, dl) = (derivs[i].1, derivs[l].1);
                hess.add(i, l, hil * di[0] * dl[0]);
                hess.add(k + i, k + l, hil * di[1] * dl[1]);
                hess.add(k + i, l, hil * di[1] * dl[0]);
                if i != l {
                    hess.add(k + l, i, hil * dl[1] * di[0]);
                }
            }
        }
        for i in 0..k {
            let s = derivs[i].2;
            hess.add(i, i, scale * g[i] * s[0]);
            hess.add(k + i, i, scale * g[i] * s[1]);
            hess.add(k + i, k + i, scale * g[i] * s[2]);
        }
    }

    fn num_inequalities(&self) -> usize {
        2
    }

    fn inequality(&self, i: usize, z: &[f64]) -> f64 {
        budget_value(i, self.k(), z)
    }

    fn inequality_gradient(&self, i: usize, _z: &[f64], grad: &mut Vec<(usize, f64)>) {
        budget_gradient(i, self.k(), grad)
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, f64::INFINITY); 2 * self.k()]
    }
}

fn budget_value(i: usize, k: usize, z: &[f64]) -> f64 {
    let range = if i == 0 { 0..k } else { k..2 * k };
    z[range].iter().sum::<f64>() - 1.0
}

fn budget_gradient(i: usize, k: usize, grad: &mut Vec<(usize, f64)>) {
    grad.clear();
    let offset = if i == 0 { 0 } else { k };
    grad.extend((0..k).map(|j| (offset + j, 1.0)));
}

/// Per-slot epigraph problem: maximize `η` s.t. `R_k ≥ η` for all users.
pub(crate) struct MaxMinSlot<'a> {
    pub gains: &'a [f64],
}

impl MaxMinSlot<'_> {
    fn k(&self) -> usize {
        self.gains.len()
    }
}

impl SmoothProgram for MaxMinSlot<'_> {
    fn dim(&self) -> usize {
        2 * self.k() + 1
    }

    fn start(&self) -> Vec<f64> {
        let k = self.k();
        let share = 1.0 / (k + 1) as f64;
        let worst = self
            .gains
            .iter()
            .map(|&g| rate(share, share, g))
            .fold(f64::INFINITY, f64::min);
        let mut z = vec![share; 2 * k + 1];
        z[2 * k] = 0.5 * worst;
        z
    }

    fn objective(&self, z: &[f64]) -> f64 {
        z[2 * self.k()]
    }

    fn objective_gradient(&self, _z: &[f64], grad: &mut [f64]) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        grad[2 * self.k()] = 1.0;
    }

    fn objective_hessian(&self, _z: &[f64], _scale: f64, _hess: &mut SymBand) {}

    fn num_inequalities(&self) -> usize {
        self.k() + 2
    }

    fn inequality(&self, i: usize, z: &[f64]) -> f64 {
        let k = self.k();
        if i < k {
            z[2 * k] - rate(z[i], z[k + i], self.gains[i])
        } else {
            budget_value(i - k, k, z)
        }
    }

    fn inequality_gradient(&self, i: usize, z: &[f64], grad: &mut Vec<(usize, f64)>) {
        let k = self.k();
        if i < k {
            let (_, d, _) = rate_derivatives(z[i], z[k + i], self.gains[i]);
            grad.clear();
            grad.extend([(i, -d[0]), (k + i, -d[1]), (2 * k, 1.0)]);
        } else {
            budget_gradient(i - k, k, grad)
        }
    }

    fn inequality_hessian(&self, i: usize, z: &[f64], scale: f64, hess: &mut SymBand) {
        let k = self.k();
        if i < k {
            let (_, _, s) = rate_derivatives(z[i], z[k + i], self.gains[i]);
            hess.add(i, i, -scale * s[0]);
            hess.add(k + i, i, -scale * s[1]);
            hess.add(k + i, k + i, -scale * s[2]);
        }
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        let mut b = vec![(0.0, f64::INFINITY); 2 * self.k()];
        b.push((f64::NEG_INFINITY, f64::INFINITY));
        b
    }
}

/// Zeroes vanishing entries and clips tiny budget overshoots.
fn clean_slot(b: &mut [f64], p: &mut [f64]) {
    for i in 0..b.len() {
        if b[i] < B_FLOOR {
            b[i] = 0.0;
            p[i] = 0.0;
        }
        p[i] = p[i].max(0.0);
    }
    for v in [b, p] {
        let total: f64 = v.iter().sum();
        if total > 1.0 {
            v.iter_mut().for_each(|x| *x /= total);
        }
    }
}

/// Solves one slot of the weighted problem for per-user gains `γ_k`.
pub fn solve_weighted_slot(gains: &[f64], alpha: f64, tol: f64) -> Result<(Vec<f64>, Vec<f64>), SolverStatus> {
    let k = gains.len();
    let program = WeightedSlot { gains, alpha };
    let result = maximize(&program, tol, SLOT_MAX_ITER);
    if !result.converged() {
        return Err(result.status);
    }
    let mut b = result.point[..k].to_vec();
    let mut p = result.point[k..].to_vec();
    clean_slot(&mut b, &mut p);
    Ok((b, p))
}

/// Solves one slot of the max-min problem, returning `(b, p, η)` with every
/// user's rate equal to `η`.
pub fn solve_maxmin_slot(gains: &[f64], tol: f64) -> Result<(Vec<f64>, Vec<f64>, f64), SolverStatus> {
    let k = gains.len();
    let program = MaxMinSlot { gains };
    let result = maximize(&program, tol, SLOT_MAX_ITER);
    if !result.converged() {
        return Err(result.status);
    }
    let b = &result.point[..k];
    let p = &result.point[k..2 * k];
    let barrier_min = (0..k)
        .map(|i| rate(b[i], p[i], gains[i]))
        .fold(f64::INFINITY, f64::min);
    let (b_eq, p_eq, eta) = equalize_power(b, gains);
    if eta >= barrier_min {
        Ok((b_eq, p_eq, eta))
    } else {
        let (mut b, mut p) = (b.to_vec(), p.to_vec());
        clean_slot(&mut b, &mut p);
        Ok((b, p, barrier_min))
    }
}

/// Minimal power fraction giving rate `eta` over bandwidth `b` at gain `gain`.
fn power_for_rate(b: f64, gain: f64, eta: f64) -> f64 {
    b * (eta / b * LN_2).exp_m1() / gain
}

/// For a bandwidth split (rescaled to use the whole budget), finds the common
/// rate `η` whose per-user minimal powers exhaust the power budget exactly.
fn equalize_power(b: &[f64], gains: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
    let total_b: f64 = b.iter().sum();
    let b: Vec<f64> = b.iter().map(|v| v / total_b).collect();
    let power_total = |eta: f64| -> f64 {
        b.iter()
            .zip(gains)
            .map(|(&bi, &g)| power_for_rate(bi, g, eta))
            .sum()
    };
    let mut hi = 1.0;
    while power_total(hi) < 1.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if power_total(mid) <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p: Vec<f64> = b
        .iter()
        .zip(gains)
        .map(|(&bi, &g)| power_for_rate(bi, g, lo))
        .collect();
    let eta = b
        .iter()
        .zip(&p)
        .zip(gains)
        .map(|((&bi, &pi), &g)| rate(bi, pi, g))
        .fold(f64::INFINITY, f64::min);
    (b, p, eta)
}

fn solve_slots<F>(gains: &Matrix, solve: F) -> Result<Allocation>
where
    F: Fn(&[f64]) -> Result<(Vec<f64>, Vec<f64>), SolverStatus> + Sync,
{
    let k = gains.rows();
    let n = gains.cols();
    let columns: Vec<_> = (0..n)
        .into_par_iter()
        .map(|slot| {
            solve(&gains.column(slot)).map_err(|status| {
                Error::solver(format!("allocation slot {slot}"), format!("{status:?}"))
            })
        })
        .collect();
    let mut b = Matrix::zeros(k, n);
    let mut p = Matrix::zeros(k, n);
    for (slot, col) in columns.into_iter().enumerate() {
        let (bc, pc) = col?;
        b.set_column(slot, &bc);
        p.set_column(slot, &pc);
    }
    Allocation::new(b, p)
}

/// Weighted allocation for a fixed trajectory: each slot maximizes
/// `H_α(R_1[n], …, R_K[n])` subject to the budget and box constraints.
pub fn solve_weighted_allocation(
    scenario: &Scenario,
    trajectory: &Trajectory,
    alpha: f64,
    tol: f64,
) -> Result<Allocation> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "weighted allocation needs a finite alpha >= 0 (got {alpha})"
        )));
    }
    let ctx = RateContext::new(scenario, trajectory);
    solve_slots(&ctx.gain, |g| solve_weighted_slot(g, alpha, tol))
}

/// Max-min allocation for a fixed trajectory: each slot maximizes the common
/// rate of all users.
pub fn solve_maxmin_allocation(scenario: &Scenario, trajectory: &Trajectory, tol: f64) -> Result<Allocation> {
    let ctx = RateContext::new(scenario, trajectory);
    solve_slots(&ctx.gain, |g| solve_maxmin_slot(g, tol).map(|(b, p, _)| (b, p)))
}

/// Time-averaged objective `(1/N) Σ_n H_α(R_·[n])`, or `(1/N) Σ_n min_k R_k[n]`
/// in max-min mode.
pub fn allocation_objective(
    scenario: &Scenario,
    trajectory: &Trajectory,
    allocation: &Allocation,
    factor: FairnessFactor,
) -> f64 {
    let ctx = RateContext::new(scenario, trajectory);
    objective_from_rates(&rates_from_gains(&ctx.gain, allocation), factor)
}

pub fn objective_from_rates(rates: &Matrix, factor: FairnessFactor) -> f64 {
    let n = rates.cols();
    (0..n).map(|slot| factor.combine(&rates.column(slot))).sum::<f64>() / n as f64
}

/// Single-slot `H_α` of the rates produced by `(b, p)` at gains `γ`.
pub fn slot_objective(gains: &[f64], b: &[f64], p: &[f64], factor: FairnessFactor) -> f64 {
    let rates: Vec<f64> = (0..gains.len()).map(|i| rate(b[i], p[i], gains[i])).collect();
    match factor {
        FairnessFactor::Finite(a) => weighted_sum(&rates, a),
        FairnessFactor::MaxMin => min_component(&rates),
    }
}
