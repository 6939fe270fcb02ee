//! Trajectory block: first-order lower-bound expansion of the rates around
//! the current iterate and one convex step on that surrogate.
//!
//! For fixed `(b, p)` the rate is convex in `x = 1 + e^{-Θ}` and
//! `y = H² + ‖q − w‖²`, so its tangent plane at `(x₀, y₀)` is a global lower
//! bound:
//!
//! ```text
//! R̃ˡᵇ = R̃ʳ − ψ (e^{−Θ} − e^{−Θʳ}) − φ (‖q − w‖² − ‖qʳ − w‖²)
//! ```
//!
//! The slack `Θ` replaces `B1 + B2·θ(q)` and is constrained by the tangent of
//! the (convex in `‖q − w‖²`) elevation ratio, `Θ ≤ B1 + B2·θˡᵇ(q)`.

use std::f64::consts::LOG2_E;

use crate::allocation::{Allocation, B_FLOOR};
use crate::channel::{elevation_ratio, squared_horizontal_distance, Trajectory};
use crate::convex_core::{maximize, SmoothProgram, SymBand};
use crate::error::{Error, Result};
use crate::fairness::{min_component, weighted_sum, weighted_sum_derivatives};
use crate::matrix::Matrix;
use crate::scenario::{Point, RicianParams, Scenario};

const STEP_MAX_ITER: usize = 3000;
/// Required speed-constraint slack (meters) of the solver start point.
const INTERIOR_MARGIN: f64 = 1e-6;
const SLACK_MARGIN: f64 = 1e-3;

/// Linearization data around `(qʳ, Θʳ)` for a fixed allocation.
#[derive(Debug, Clone)]
pub struct SCAExpansion {
    pub expansion: Trajectory,
    /// `Θʳ_k[n]`.
    pub slack: Matrix,
    /// `x₀ = 1 + e^{−Θʳ}`.
    pub x0: Matrix,
    /// `y₀ = H² + ‖qʳ − w‖²`.
    pub y0: Matrix,
    pub psi: Matrix,
    pub phi: Matrix,
    /// `R̃ʳ`, the rate at the expansion point.
    pub base_rate: Matrix,
    /// `γ₀·p / b`.
    pub gamma_hat: Matrix,
    bandwidth: Matrix,
    active: Vec<bool>,
    users: Vec<Point>,
    altitude: f64,
    rician: RicianParams,
}

impl SCAExpansion {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_slots(&self) -> usize {
        self.expansion.len()
    }

    /// Whether user `k` carries a nonzero rate term in slot `n`.
    pub fn is_active(&self, k: usize, n: usize) -> bool {
        self.active[k * self.num_slots() + n]
    }

    /// Tangent lower bound `θˡᵇ(q)` of the elevation ratio around `qʳ[n]`.
    pub fn theta_lower_bound(&self, k: usize, n: usize, q: Point) -> f64 {
        let y0 = self.y0[(k, n)];
        let u0 = y0 - self.altitude * self.altitude;
        let h = self.altitude;
        h / y0.sqrt() - h / (2.0 * y0.powf(1.5)) * (squared_horizontal_distance(q, self.users[k]) - u0)
    }

    /// `R̃ˡᵇ_k[n](q, Θ)`.
    pub fn lower_bound_rate(&self, k: usize, n: usize, q: Point, slack: f64) -> f64 {
        if !self.is_active(k, n) {
            return 0.0;
        }
        let u0 = self.y0[(k, n)] - self.altitude * self.altitude;
        self.base_rate[(k, n)]
            - self.psi[(k, n)] * ((-slack).exp() - (-self.slack[(k, n)]).exp())
            - self.phi[(k, n)] * (squared_horizontal_distance(q, self.users[k]) - u0)
    }

    /// Exact rate at `(q, Θ)`, i.e. with `f = C1 + C2/(1 + e^{−Θ})`.
    pub fn rate_with_slack(&self, k: usize, n: usize, q: Point, slack: f64) -> f64 {
        if !self.is_active(k, n) {
            return 0.0;
        }
        let RicianParams { c1, c2, .. } = self.rician;
        let y = self.altitude * self.altitude + squared_horizontal_distance(q, self.users[k]);
        let f = c1 + c2 / (1.0 + (-slack).exp());
        let b = self.bandwidth[(k, n)];
        b * (f * self.gamma_hat[(k, n)] / y).ln_1p() * LOG2_E
    }
}

/// `Θ_k[n] = B1 + B2·θ_k[n]` along `trajectory`, the slack value that makes
/// the expansion tight.
pub fn tight_slack(scenario: &Scenario, trajectory: &Trajectory) -> Matrix {
    let r = scenario.rician();
    let h = scenario.altitude();
    let users = scenario.users();
    Matrix::from_fn(users.len(), trajectory.len(), |k, n| {
        r.b1 + r.b2 * elevation_ratio(trajectory.points()[n], users[k], h)
    })
}

/// Straight line from `q_I` to `q_F` and its tight slack values.
pub fn initial_trajectory(scenario: &Scenario) -> (Trajectory, Matrix) {
    let traj = Trajectory::straight_line(scenario.q_initial(), scenario.q_final(), scenario.num_slots());
    let slack = tight_slack(scenario, &traj);
    (traj, slack)
}

pub fn build_expansion(
    scenario: &Scenario,
    allocation: &Allocation,
    expansion: &Trajectory,
    slack: &Matrix,
) -> Result<SCAExpansion> {
    let k_users = scenario.num_users();
    let n_slots = scenario.num_slots();
    if expansion.len() != n_slots
        || allocation.num_slots() != n_slots
        || allocation.num_users() != k_users
        || slack.rows() != k_users
        || slack.cols() != n_slots
    {
        return Err(Error::InvalidArgument(
            "expansion inputs disagree with the scenario dimensions".into(),
        ));
    }
    let RicianParams { c1, c2, .. } = scenario.rician();
    let h2 = scenario.altitude().powi(2);
    let gamma0 = scenario.gamma0();

    let mut x0 = Matrix::zeros(k_users, n_slots);
    let mut y0 = Matrix::zeros(k_users, n_slots);
    let mut psi = Matrix::zeros(k_users, n_slots);
    let mut phi = Matrix::zeros(k_users, n_slots);
    let mut base = Matrix::zeros(k_users, n_slots);
    let mut gamma_hat = Matrix::zeros(k_users, n_slots);
    let mut active = vec![false; k_users * n_slots];

    for (k, w) in scenario.users().iter().enumerate() {
        for (n, q) in expansion.points().iter().enumerate() {
            let b = allocation.bandwidth()[(k, n)];
            let p = allocation.power()[(k, n)];
            let x = 1.0 + (-slack[(k, n)]).exp();
            let y = h2 + squared_horizontal_distance(*q, *w);
            x0[(k, n)] = x;
            y0[(k, n)] = y;
            if p <= 0.0 || b <= 0.0 {
                continue;
            }
            if b < B_FLOOR {
                return Err(Error::DegenerateAllocation { user: k, slot: n });
            }
            let gh = gamma0 * p / b;
            let denom = x * y + (c1 * x + c2) * gh;
            gamma_hat[(k, n)] = gh;
            base[(k, n)] = b * ((c1 + c2 / x) * gh / y).ln_1p() * LOG2_E;
            psi[(k, n)] = b * c2 * gh * LOG2_E / (x * denom);
            phi[(k, n)] = b * (c1 * x + c2) * gh * LOG2_E / (y * denom);
            active[k * n_slots + n] = true;
        }
    }

    Ok(SCAExpansion {
        expansion: expansion.clone(),
        slack: slack.clone(),
        x0,
        y0,
        psi,
        phi,
        base_rate: base,
        gamma_hat,
        bandwidth: allocation.bandwidth().clone(),
        active,
        users: scenario.users().to_vec(),
        altitude: scenario.altitude(),
        rician: scenario.rician(),
    })
}

/// Free-function form of [`SCAExpansion::lower_bound_rate`].
pub fn lower_bound_rate(expansion: &SCAExpansion, k: usize, n: usize, q: Point, slack: f64) -> f64 {
    expansion.lower_bound_rate(k, n, q, slack)
}

/// Outcome of one trajectory step.
#[derive(Debug, Clone)]
pub struct TrajectoryStep {
    pub trajectory: Trajectory,
    pub slack: Matrix,
    /// Per-slot epigraph values; only set by the max-min step.
    pub eta: Option<Vec<f64>>,
    /// Surrogate objective at the returned point.
    pub surrogate: f64,
    /// Surrogate objective at the expansion point.
    pub surrogate_at_expansion: f64,
    /// `false` when the incoming iterate was returned unchanged.
    pub moved: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Objective {
    Weighted(f64),
    MaxMin,
}

#[derive(Debug, Clone, Copy)]
enum Constraint {
    Speed(usize),
    Slack(usize, usize),
    Epigraph(usize, usize),
}

/// Surrogate program over `(q[2..N−1], Θ_active, η)`, variables grouped by slot.
struct StepProgram<'a> {
    exp: &'a SCAExpansion,
    objective: Objective,
    q_index: Vec<Option<usize>>,
    theta_index: Vec<Option<usize>>,
    eta_index: Vec<Option<usize>>,
    constraints: Vec<Constraint>,
    endpoints: (Point, Point),
    step_sq: f64,
    b1: f64,
    b2: f64,
    dim: usize,
    bandwidth: usize,
    start: Vec<f64>,
}

impl<'a> StepProgram<'a> {
    fn new(exp: &'a SCAExpansion, scenario: &Scenario, objective: Objective) -> Self {
        let k_users = exp.num_users();
        let n_slots = exp.num_slots();
        let mut q_index = vec![None; n_slots];
        let mut theta_index = vec![None; k_users * n_slots];
        let mut eta_index = vec![None; n_slots];
        let mut next = 0;
        let mut widest = 0;
        for n in 0..n_slots {
            let begin = next;
            if n > 0 && n + 1 < n_slots {
                q_index[n] = Some(next);
                next += 2;
            }
            for k in 0..k_users {
                if exp.is_active(k, n) {
                    theta_index[k * n_slots + n] = Some(next);
                    next += 1;
                }
            }
            if objective == Objective::MaxMin {
                eta_index[n] = Some(next);
                next += 1;
            }
            widest = widest.max(next - begin);
        }
        let mut constraints = Vec::new();
        for n in 0..n_slots - 1 {
            if q_index[n].is_some() || q_index[n + 1].is_some() {
                constraints.push(Constraint::Speed(n));
            }
        }
        for n in 0..n_slots {
            for k in 0..k_users {
                if exp.is_active(k, n) {
                    constraints.push(Constraint::Slack(k, n));
                }
            }
        }
        if objective == Objective::MaxMin {
            for n in 0..n_slots {
                for k in 0..k_users {
                    constraints.push(Constraint::Epigraph(k, n));
                }
            }
        }
        let r = scenario.rician();
        Self {
            exp,
            objective,
            q_index,
            theta_index,
            eta_index,
            constraints,
            endpoints: (scenario.q_initial(), scenario.q_final()),
            step_sq: scenario.max_step().powi(2),
            b1: r.b1,
            b2: r.b2,
            dim: next,
            bandwidth: widest + 1,
            start: Vec::new(),
        }
    }

    fn position(&self, n: usize, z: &[f64]) -> Point {
        match self.q_index[n] {
            Some(o) => [z[o], z[o + 1]],
            None if n == 0 => self.endpoints.0,
            None => self.endpoints.1,
        }
    }

    fn theta(&self, k: usize, n: usize, z: &[f64]) -> f64 {
        match self.theta_index[k * self.exp.num_slots() + n] {
            Some(o) => z[o],
            None => self.exp.slack[(k, n)],
        }
    }

    fn slot_rates(&self, n: usize, z: &[f64]) -> Vec<f64> {
        let q = self.position(n, z);
        (0..self.exp.num_users())
            .map(|k| self.exp.lower_bound_rate(k, n, q, self.theta(k, n, z)))
            .collect()
    }

    fn pack(&self, traj: &[Point], slack: &Matrix, eta: Option<&[f64]>) -> Vec<f64> {
        let mut z = vec![0.0; self.dim];
        let n_slots = self.exp.num_slots();
        for n in 0..n_slots {
            if let Some(o) = self.q_index[n] {
                z[o] = traj[n][0];
                z[o + 1] = traj[n][1];
            }
            for k in 0..self.exp.num_users() {
                if let Some(o) = self.theta_index[k * n_slots + n] {
                    z[o] = slack[(k, n)];
                }
            }
            if let (Some(o), Some(eta)) = (self.eta_index[n], eta) {
                z[o] = eta[n];
            }
        }
        z
    }

    /// Surrogate objective evaluated through the lower-bound rates (the
    /// epigraph variables are ignored in max-min mode).
    fn surrogate(&self, z: &[f64]) -> f64 {
        let n_slots = self.exp.num_slots();
        let total: f64 = (0..n_slots)
            .map(|n| {
                let x = self.slot_rates(n, z);
                match self.objective {
                    Objective::Weighted(a) => weighted_sum(&x, a),
                    Objective::MaxMin => min_component(&x),
                }
            })
            .sum();
        total / n_slots as f64
    }

    /// Gradient entries `(index, ∂R̃ˡᵇ_k[n])` with respect to the slot's variables.
    fn rate_gradient(&self, k: usize, n: usize, z: &[f64], out: &mut Vec<(usize, f64)>) {
        out.clear();
        if !self.exp.is_active(k, n) {
            return;
        }
        let q = self.position(n, z);
        let w = self.exp.users[k];
        let phi = self.exp.phi[(k, n)];
        if let Some(o) = self.q_index[n] {
            out.push((o, -2.0 * phi * (q[0] - w[0])));
            out.push((o + 1, -2.0 * phi * (q[1] - w[1])));
        }
        if let Some(o) = self.theta_index[k * self.exp.num_slots() + n] {
            out.push((o, self.exp.psi[(k, n)] * (-z[o]).exp()));
        }
    }

    /// Accumulates `scale · ∇²R̃ˡᵇ_k[n]` (diagonal).
    fn rate_hessian(&self, k: usize, n: usize, z: &[f64], scale: f64, hess: &mut SymBand) {
        if !self.exp.is_active(k, n) {
            return;
        }
        let phi = self.exp.phi[(k, n)];
        if let Some(o) = self.q_index[n] {
            hess.add(o, o, -2.0 * phi * scale);
            hess.add(o + 1, o + 1, -2.0 * phi * scale);
        }
        if let Some(o) = self.theta_index[k * self.exp.num_slots() + n] {
            hess.add(o, o, -self.exp.psi[(k, n)] * (-z[o]).exp() * scale);
        }
    }
}

impl SmoothProgram for StepProgram<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    fn start(&self) -> Vec<f64> {
        self.start.clone()
    }

    fn objective(&self, z: &[f64]) -> f64 {
        match self.objective {
            Objective::Weighted(_) => self.surrogate(z),
            Objective::MaxMin => {
                let n_slots = self.exp.num_slots();
                (0..n_slots).map(|n| z[self.eta_index[n].unwrap()]).sum::<f64>() / n_slots as f64
            }
        }
    }

    fn objective_gradient(&self, z: &[f64], grad: &mut [f64]) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let n_slots = self.exp.num_slots();
        let inv_n = 1.0 / n_slots as f64;
        match self.objective {
            Objective::MaxMin => {
                for n in 0..n_slots {
                    grad[self.eta_index[n].unwrap()] = inv_n;
                }
            }
            Objective::Weighted(alpha) => {
                let mut local = Vec::new();
                for n in 0..n_slots {
                    let x = self.slot_rates(n, z);
                    let (_, g, _) = weighted_sum_derivatives(&x, alpha);
                    for (k, gk) in g.iter().enumerate() {
                        self.rate_gradient(k, n, z, &mut local);
                        for &(j, v) in &local {
                            grad[j] += inv_n * gk * v;
                        }
                    }
                }
            }
        }
    }

    fn objective_hessian(&self, z: &[f64], scale: f64, hess: &mut SymBand) {
        let Objective::Weighted(alpha) = self.objective else {
            return;
        };
        let n_slots = self.exp.num_slots();
        let k_users = self.exp.num_users();
        let s = scale / n_slots as f64;
        let mut jac: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k_users];
        for n in 0..n_slots {
            let x = self.slot_rates(n, z);
            let (_, g, h) = weighted_sum_derivatives(&x, alpha);
            for (k, row) in jac.iter_mut().enumerate() {
                self.rate_gradient(k, n, z, row);
            }
            // Jᵀ ∇²H J: accumulate each (i, l) user pair once per index pair
            for i in 0..k_users {
                for l in 0..k_users {
                    let hil = h[i * k_users + l] * s;
                    if hil == 0.0 {
                        continue;
                    }
                    for &(a, va) in &jac[i] {
                        for &(b, vb) in &jac[l] {
                            if a >= b {
                                hess.add(a, b, hil * va * vb);
                            }
                        }
                    }
                }
            }
            for (k, gk) in g.iter().enumerate() {
                self.rate_hessian(k, n, z, s * gk, hess);
            }
        }
    }

    fn num_inequalities(&self) -> usize {
        self.constraints.len()
    }

    fn inequality(&self, i: usize, z: &[f64]) -> f64 {
        match self.constraints[i] {
            Constraint::Speed(n) => {
                squared_horizontal_distance(self.position(n + 1, z), self.position(n, z)) - self.step_sq
            }
            Constraint::Slack(k, n) => {
                let q = self.position(n, z);
                self.theta(k, n, z) - self.b1 - self.b2 * self.exp.theta_lower_bound(k, n, q)
            }
            Constraint::Epigraph(k, n) => {
                let q = self.position(n, z);
                z[self.eta_index[n].unwrap()] - self.exp.lower_bound_rate(k, n, q, self.theta(k, n, z))
            }
        }
    }

    fn inequality_gradient(&self, i: usize, z: &[f64], grad: &mut Vec<(usize, f64)>) {
        grad.clear();
        match self.constraints[i] {
            Constraint::Speed(n) => {
                let a = self.position(n, z);
                let b = self.position(n + 1, z);
                let d = [b[0] - a[0], b[1] - a[1]];
                if let Some(o) = self.q_index[n] {
                    grad.push((o, -2.0 * d[0]));
                    grad.push((o + 1, -2.0 * d[1]));
                }
                if let Some(o) = self.q_index[n + 1] {
                    grad.push((o, 2.0 * d[0]));
                    grad.push((o + 1, 2.0 * d[1]));
                }
            }
            Constraint::Slack(k, n) => {
                let q = self.position(n, z);
                let w = self.exp.users[k];
                let y0 = self.exp.y0[(k, n)];
                let c = self.exp.altitude / (2.0 * y0.powf(1.5));
                if let Some(o) = self.q_index[n] {
                    grad.push((o, 2.0 * self.b2 * c * (q[0] - w[0])));
                    grad.push((o + 1, 2.0 * self.b2 * c * (q[1] - w[1])));
                }
                grad.push((self.theta_index[k * self.exp.num_slots() + n].unwrap(), 1.0));
            }
            Constraint::Epigraph(k, n) => {
                self.rate_gradient(k, n, z, grad);
                grad.iter_mut().for_each(|e| e.1 = -e.1);
                grad.push((self.eta_index[n].unwrap(), 1.0));
            }
        }
    }

    fn inequality_hessian(&self, i: usize, z: &[f64], scale: f64, hess: &mut SymBand) {
        match self.constraints[i] {
            Constraint::Speed(n) => {
                let a = self.q_index[n];
                let b = self.q_index[n + 1];
                for d in 0..2 {
                    if let Some(o) = a {
                        hess.add(o + d, o + d, 2.0 * scale);
                    }
                    if let Some(o) = b {
                        hess.add(o + d, o + d, 2.0 * scale);
                    }
                    if let (Some(oa), Some(ob)) = (a, b) {
                        hess.add(ob + d, oa + d, -2.0 * scale);
                    }
                }
            }
            Constraint::Slack(k, n) => {
                if let Some(o) = self.q_index[n] {
                    let y0 = self.exp.y0[(k, n)];
                    let c = self.exp.altitude / (2.0 * y0.powf(1.5));
                    hess.add(o, o, 2.0 * self.b2 * c * scale);
                    hess.add(o + 1, o + 1, 2.0 * self.b2 * c * scale);
                }
            }
            Constraint::Epigraph(k, n) => self.rate_hessian(k, n, z, -scale, hess),
        }
    }
}

/// Strictly interior start: `qʳ`, pulled toward the straight line when its
/// speed slack is below [`INTERIOR_MARGIN`]. `None` if no interior exists.
fn interior_start(scenario: &Scenario, expansion: &Trajectory) -> Option<Vec<Point>> {
    let step = scenario.max_step();
    let pts = expansion.points();
    let slack_r = pts
        .windows(2)
        .map(|w| step - (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
        .fold(f64::INFINITY, f64::min);
    if slack_r >= INTERIOR_MARGIN {
        return Some(pts.to_vec());
    }
    let line = Trajectory::straight_line(scenario.q_initial(), scenario.q_final(), pts.len());
    let slack_line = step
        - (scenario.q_final()[0] - scenario.q_initial()[0]).hypot(scenario.q_final()[1] - scenario.q_initial()[1])
            / (pts.len() - 1) as f64;
    if slack_line <= 0.0 {
        return None;
    }
    let target = INTERIOR_MARGIN.min(0.5 * slack_line);
    let kappa = ((target - slack_r) / (slack_line - slack_r)).clamp(0.0, 1.0);
    Some(
        pts.iter()
            .zip(line.points())
            .map(|(a, b)| [(1.0 - kappa) * a[0] + kappa * b[0], (1.0 - kappa) * a[1] + kappa * b[1]])
            .collect(),
    )
}

fn solve_step(
    scenario: &Scenario,
    allocation: &Allocation,
    q_r: &Trajectory,
    slack_r: &Matrix,
    objective: Objective,
    tol: f64,
) -> Result<TrajectoryStep> {
    let exp = build_expansion(scenario, allocation, q_r, slack_r)?;
    let mut program = StepProgram::new(&exp, scenario, objective);
    let at_expansion = program.pack(q_r.points(), slack_r, None);
    let surrogate_r = program.surrogate(&at_expansion);

    let eta_r: Option<Vec<f64>> = (objective == Objective::MaxMin).then(|| {
        (0..exp.num_slots())
            .map(|n| min_component(&program.slot_rates(n, &at_expansion)))
            .collect()
    });
    let unchanged = |surrogate: f64| TrajectoryStep {
        trajectory: q_r.clone(),
        slack: slack_r.clone(),
        eta: eta_r.clone(),
        surrogate,
        surrogate_at_expansion: surrogate,
        moved: false,
    };

    let any_active = (0..exp.num_users()).any(|k| (0..exp.num_slots()).any(|n| exp.is_active(k, n)));
    if !any_active {
        return Ok(unchanged(surrogate_r));
    }
    let Some(start_pts) = interior_start(scenario, q_r) else {
        return Ok(unchanged(surrogate_r));
    };

    let start_slack = Matrix::from_fn(exp.num_users(), exp.num_slots(), |k, n| {
        program.b1 + program.b2 * exp.theta_lower_bound(k, n, start_pts[n]) - SLACK_MARGIN
    });
    let mut start = program.pack(&start_pts, &start_slack, None);
    if objective == Objective::MaxMin {
        for n in 0..exp.num_slots() {
            let lo = min_component(&program.slot_rates(n, &start));
            start[program.eta_index[n].unwrap()] = lo - SLACK_MARGIN.max(1e-3 * lo.abs());
        }
    }
    program.start = start;

    let result = maximize(&program, tol, STEP_MAX_ITER);
    if !result.converged() {
        return Err(Error::solver(
            "trajectory step",
            format!("{:?} after {} iterations", result.status, result.iterations),
        ));
    }
    let z = &result.point;
    let surrogate = program.surrogate(z);
    if !(surrogate > surrogate_r) {
        return Ok(unchanged(surrogate_r));
    }

    let mut points: Vec<Point> = (0..exp.num_slots()).map(|n| program.position(n, z)).collect();
    points[0] = scenario.q_initial();
    let last = points.len() - 1;
    points[last] = scenario.q_final();
    let trajectory = Trajectory::new(points);
    let tight = tight_slack(scenario, &trajectory);
    let slack = Matrix::from_fn(exp.num_users(), exp.num_slots(), |k, n| {
        if exp.is_active(k, n) {
            program.theta(k, n, z)
        } else {
            tight[(k, n)]
        }
    });
    let eta = (objective == Objective::MaxMin).then(|| {
        (0..exp.num_slots())
            .map(|n| min_component(&program.slot_rates(n, z)))
            .collect()
    });
    Ok(TrajectoryStep {
        trajectory,
        slack,
        eta,
        surrogate,
        surrogate_at_expansion: surrogate_r,
        moved: true,
    })
}

/// One SCA step for the weighted objective: maximizes
/// `(1/N) Σ_n H_α(R̃ˡᵇ_·[n])` over the trajectory and slacks.
pub fn solve_trajectory_step(
    scenario: &Scenario,
    allocation: &Allocation,
    q_r: &Trajectory,
    slack_r: &Matrix,
    alpha: f64,
    tol: f64,
) -> Result<TrajectoryStep> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "trajectory step needs a finite alpha >= 0 (got {alpha})"
        )));
    }
    solve_step(scenario, allocation, q_r, slack_r, Objective::Weighted(alpha), tol)
}

/// One SCA step for the max-min objective `(1/N) Σ_n η_n`, `R̃ˡᵇ_k[n] ≥ η_n`.
pub fn solve_maxmin_trajectory_step(
    scenario: &Scenario,
    allocation: &Allocation,
    q_r: &Trajectory,
    slack_r: &Matrix,
    tol: f64,
) -> Result<TrajectoryStep> {
    solve_step(scenario, allocation, q_r, slack_r, Objective::MaxMin, tol)
}

#[cfg(test)]
mod tests;
