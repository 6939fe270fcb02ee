//! Elevation-angle dependent Rician air-to-ground channel and the per-slot
//! achievable rate of each user.

use std::f64::consts::LN_2;

use crate::allocation::Allocation;
use crate::matrix::Matrix;
use crate::scenario::{Point, RicianParams, Scenario};

/// UAV horizontal positions, one per slot, at the scenario's fixed altitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<Point>,
}

impl Trajectory {
    pub fn new(points: Vec<Point>) -> Self {
        Self { points }
    }

    /// Straight-line interpolation from `start` to `end` over `slots` points.
    pub fn straight_line(start: Point, end: Point, slots: usize) -> Self {
        assert!(slots >= 2);
        let last = (slots - 1) as f64;
        let points = (0..slots)
            .map(|n| {
                let t = n as f64 / last;
                [
                    start[0] + t * (end[0] - start[0]),
                    start[1] + t * (end[1] - start[1]),
                ]
            })
            .collect();
        Self { points }
    }

    pub fn hovering(at: Point, slots: usize) -> Self {
        Self {
            points: vec![at; slots],
        }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest violation of the endpoint and speed constraints (meters, 0 when feasible).
    pub fn max_violation(&self, scenario: &Scenario) -> f64 {
        let mut worst = 0.0f64;
        if let (Some(first), Some(last)) = (self.points.first(), self.points.last()) {
            worst = worst.max(horizontal_distance(*first, scenario.q_initial()));
            worst = worst.max(horizontal_distance(*last, scenario.q_final()));
        }
        let step = scenario.max_step();
        for pair in self.points.windows(2) {
            worst = worst.max(horizontal_distance(pair[0], pair[1]) - step);
        }
        worst
    }
}

pub fn horizontal_distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn squared_horizontal_distance(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Slant range between the UAV at horizontal position `q` and the user at `w`.
pub fn distance(q: Point, w: Point, altitude: f64) -> f64 {
    (altitude * altitude + squared_horizontal_distance(q, w)).sqrt()
}

/// `θ = H / d`, the sine of the elevation angle seen from the user.
pub fn elevation_ratio(q: Point, w: Point, altitude: f64) -> f64 {
    altitude / distance(q, w, altitude)
}

/// Logistic approximation of the effective fading power at elevation ratio `theta`.
pub fn effective_fading(theta: f64, rician: &RicianParams) -> f64 {
    fading_from_slack(rician.b1 + rician.b2 * theta, rician)
}

/// Effective fading with the logistic argument given directly.
pub fn fading_from_slack(slack: f64, rician: &RicianParams) -> f64 {
    rician.c1 + rician.c2 / (1.0 + (-slack).exp())
}

/// Achievable rate `b·log₂(1 + γ·p/b)` in bps/Hz, continuously extended to 0 at `b = 0`.
pub fn rate(b: f64, p: f64, gain: f64) -> f64 {
    if b <= 0.0 {
        return 0.0;
    }
    b * (gain * p / b).ln_1p() / LN_2
}

/// First and second derivatives of [`rate`] with respect to `(b, p)`.
///
/// Returns `(value, [dR/db, dR/dp], [d²R/db², d²R/db dp, d²R/dp²])`.
pub(crate) fn rate_derivatives(b: f64, p: f64, gain: f64) -> (f64, [f64; 2], [f64; 3]) {
    let s = gain * p / b;
    let one_s = 1.0 + s;
    let value = b * s.ln_1p() / LN_2;
    let db = (s.ln_1p() - s / one_s) / LN_2;
    let dp = gain / one_s / LN_2;
    let denom = b * one_s * one_s * LN_2;
    let hbb = -s * s / denom;
    let hbp = gain * s / denom;
    let hpp = -gain * gain / denom;
    (value, [db, dp], [hbb, hbp, hpp])
}

/// Per-(user, slot) link quantities for one trajectory.
#[derive(Debug, Clone)]
pub struct RateContext {
    pub distance: Matrix,
    pub elevation: Matrix,
    pub fading: Matrix,
    /// `γ_k[n] = f_k[n]·γ₀ / d_k[n]²`.
    pub gain: Matrix,
}

impl RateContext {
    pub fn new(scenario: &Scenario, trajectory: &Trajectory) -> Self {
        let k = scenario.num_users();
        let n = trajectory.len();
        let h = scenario.altitude();
        let rician = scenario.rician();
        let mut distance_m = Matrix::zeros(k, n);
        let mut elevation = Matrix::zeros(k, n);
        let mut fading = Matrix::zeros(k, n);
        let mut gain = Matrix::zeros(k, n);
        for (ki, w) in scenario.users().iter().enumerate() {
            for (ni, q) in trajectory.points().iter().enumerate() {
                let d = distance(*q, *w, h);
                let theta = h / d;
                let f = effective_fading(theta, &rician);
                distance_m[(ki, ni)] = d;
                elevation[(ki, ni)] = theta;
                fading[(ki, ni)] = f;
                gain[(ki, ni)] = f * scenario.gamma0() / (d * d);
            }
        }
        Self {
            distance: distance_m,
            elevation,
            fading,
            gain,
        }
    }
}

/// K×N matrix of achievable rates for the given trajectory and allocation.
pub fn rate_matrix(scenario: &Scenario, trajectory: &Trajectory, allocation: &Allocation) -> Matrix {
    let ctx = RateContext::new(scenario, trajectory);
    rates_from_gains(&ctx.gain, allocation)
}

pub(crate) fn rates_from_gains(gain: &Matrix, allocation: &Allocation) -> Matrix {
    Matrix::from_fn(gain.rows(), gain.cols(), |k, n| {
        rate(
            allocation.bandwidth()[(k, n)],
            allocation.power()[(k, n)],
            gain[(k, n)],
        )
    })
}
