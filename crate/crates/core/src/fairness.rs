//! The softmin-weighted throughput combiner `H_α`, its derivatives, and
//! scalar fairness metrics.
//!
//! `H_α(x) = Σ_j ω_j x_j` with `ω = softmax(-α x)`. At `α = 0` this is the
//! arithmetic mean; as `α → ∞` it tends to `min_j x_j`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Fairness factor: a finite `α ≥ 0` or the max-min limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FairnessFactor {
    Finite(f64),
    /// `α → ∞`; routed to the max-min code path, never used in `H_α` arithmetic.
    MaxMin,
}

impl FairnessFactor {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_nan() || alpha < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "fairness factor must be >= 0 (got {alpha})"
            )));
        }
        if alpha.is_infinite() {
            Ok(FairnessFactor::MaxMin)
        } else {
            Ok(FairnessFactor::Finite(alpha))
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            FairnessFactor::Finite(a) => a,
            FairnessFactor::MaxMin => f64::INFINITY,
        }
    }

    /// Combine per-user rates of a single slot.
    pub fn combine(self, x: &[f64]) -> f64 {
        match self {
            FairnessFactor::Finite(a) => weighted_sum(x, a),
            FairnessFactor::MaxMin => min_component(x),
        }
    }
}

impl fmt::Display for FairnessFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FairnessFactor::Finite(a) => write!(f, "{a}"),
            FairnessFactor::MaxMin => f.write_str("inf"),
        }
    }
}

/// Softmin weights `ω_j = e^{-α x_j} / Σ_i e^{-α x_i}`, shifted by `min x`
/// before exponentiation so that large `α` does not underflow.
pub fn weights(x: &[f64], alpha: f64) -> Vec<f64> {
    let lo = min_component(x);
    let mut w: Vec<f64> = x.iter().map(|&v| (-alpha * (v - lo)).exp()).collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    w
}

/// `H_α(x)`.
pub fn weighted_sum(x: &[f64], alpha: f64) -> f64 {
    weights(x, alpha).iter().zip(x).map(|(w, v)| w * v).sum()
}

/// `∂H_α/∂x_j = ω_j (1 - α (x_j - H_α))`.
pub fn grad_weighted_sum(x: &[f64], alpha: f64) -> Vec<f64> {
    let w = weights(x, alpha);
    let h: f64 = w.iter().zip(x).map(|(w, v)| w * v).sum();
    w.iter()
        .zip(x)
        .map(|(&wj, &xj)| wj * (1.0 - alpha * (xj - h)))
        .collect()
}

/// Value, gradient and dense Hessian (row-major K×K) of `H_α` at `x`.
pub fn weighted_sum_derivatives(x: &[f64], alpha: f64) -> (f64, Vec<f64>, Vec<f64>) {
    let k = x.len();
    let w = weights(x, alpha);
    let h: f64 = w.iter().zip(x).map(|(w, v)| w * v).sum();
    let grad: Vec<f64> = w
        .iter()
        .zip(x)
        .map(|(&wj, &xj)| wj * (1.0 - alpha * (xj - h)))
        .collect();
    let mut hess = vec![0.0; k * k];
    for i in 0..k {
        let ci = 1.0 - alpha * (x[i] - h);
        for l in 0..k {
            let delta = if i == l { 1.0 } else { 0.0 };
            hess[i * k + l] = -alpha * w[i] * (delta - w[l]) * ci - alpha * w[i] * delta
                + alpha * w[i] * grad[l];
        }
    }
    (h, grad, hess)
}

/// `min_j x_j`, the `α → ∞` limit of [`weighted_sum`].
pub fn min_component(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FairnessMetrics {
    /// Population variance.
    pub variance: f64,
    /// Jain's index `(Σx)² / (K·Σx²)`; 1 for the all-zero vector.
    pub jain_index: f64,
    pub min: f64,
    pub mean: f64,
}

pub fn fairness_metrics(x: &[f64]) -> FairnessMetrics {
    assert!(!x.is_empty(), "fairness metrics need at least one user");
    let k = x.len() as f64;
    let sum: f64 = x.iter().sum();
    let mean = sum / k;
    let variance = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k;
    let sum_sq: f64 = x.iter().map(|v| v * v).sum();
    let jain_index = if sum_sq == 0.0 { 1.0 } else { sum * sum / (k * sum_sq) };
    FairnessMetrics {
        variance,
        jain_index,
        min: min_component(x),
        mean,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition1Check {
    pub holds: bool,
    /// `max_{k,n} α·R_k[n]`.
    pub max_product: f64,
}

/// Whether `α·R_k[n] ≤ 1` for every entry, i.e. whether `H_α` is certified
/// concave and nondecreasing over the observed rates.
pub fn check_condition1(rates: &Matrix, alpha: f64) -> Condition1Check {
    let max_product = rates
        .iter()
        .map(|&r| alpha * r)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_product = if max_product.is_finite() { max_product } else { 0.0 };
    Condition1Check {
        holds: max_product <= 1.0,
        max_product,
    }
}
