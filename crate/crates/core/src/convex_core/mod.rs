//! Small dense/banded log-barrier interior-point solver for smooth concave
//! maximization over convex inequality constraints, linear equalities and
//! box bounds.
//!
//! Each barrier stage maximizes `f(z) + μ Σ log(-g_i(z)) + μ Σ log(bound slack)`
//! with damped Newton steps (backtracking, Armijo). `μ` starts at 1 and is
//! divided by 10 until `m·μ ≤ tol`, where `m` counts inequalities plus
//! finite bounds. Hessians are assembled in a symmetric band whose width the
//! program declares, so time-coupled problems stay linear in the horizon.

mod band;

pub use band::SymBand;

/// Linear equality `Σ_j row_j z_j = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEquality {
    pub row: Vec<f64>,
    pub rhs: f64,
}

/// A concave maximization problem. Gradients of inequality constraints are
/// sparse `(index, value)` lists; Hessian callbacks *accumulate* `scale · ∇²`
/// into the band.
pub trait SmoothProgram {
    fn dim(&self) -> usize;

    /// Half-bandwidth of the Hessian sparsity pattern (objective and constraints).
    fn bandwidth(&self) -> usize {
        self.dim().saturating_sub(1)
    }

    /// Strictly feasible starting point.
    fn start(&self) -> Vec<f64>;

    fn objective(&self, z: &[f64]) -> f64;

    /// Overwrites `grad` with `∇f(z)`.
    fn objective_gradient(&self, z: &[f64], grad: &mut [f64]);

    fn objective_hessian(&self, z: &[f64], scale: f64, hess: &mut SymBand);

    fn num_inequalities(&self) -> usize {
        0
    }

    /// Value of the `i`-th convex constraint `g_i(z) ≤ 0`.
    fn inequality(&self, _i: usize, _z: &[f64]) -> f64 {
        unreachable!("program declares no inequalities")
    }

    /// Clears `grad` and pushes the nonzero entries of `∇g_i(z)`.
    fn inequality_gradient(&self, _i: usize, _z: &[f64], _grad: &mut Vec<(usize, f64)>) {
        unreachable!("program declares no inequalities")
    }

    /// Accumulates `scale · ∇²g_i(z)`; linear constraints keep the default.
    fn inequality_hessian(&self, _i: usize, _z: &[f64], _scale: f64, _hess: &mut SymBand) {}

    fn equalities(&self) -> Vec<LinearEquality> {
        Vec::new()
    }

    /// Per-coordinate `(lower, upper)`; infinite entries are ignored.
    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(f64::NEG_INFINITY, f64::INFINITY); self.dim()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    Converged,
    IterLimit,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub point: Vec<f64>,
    pub objective: f64,
    /// Newton decrement at the final stage: the `H⁻¹`-norm of the projected
    /// gradient of the barrier objective.
    pub stationarity: f64,
    pub iterations: usize,
    pub status: SolverStatus,
    /// Objective `f` at the end of each barrier stage.
    pub stage_objectives: Vec<f64>,
}

impl SolverResult {
    pub fn converged(&self) -> bool {
        self.status == SolverStatus::Converged
    }
}

const ARMIJO: f64 = 0.01;
const MIN_STEP: f64 = 1e-14;

struct Workspace {
    n: usize,
    ineq: usize,
    bounds: Vec<(f64, f64)>,
    eqs: Vec<LinearEquality>,
    grad: Vec<f64>,
    cgrad: Vec<Vec<(usize, f64)>>,
    cval: Vec<f64>,
    hess: SymBand,
}

/// Maximizes `program` from its start point.
pub fn maximize<P: SmoothProgram + ?Sized>(program: &P, tol: f64, max_iter: usize) -> SolverResult {
    assert!(tol > 0.0, "tolerance must be positive");
    let n = program.dim();
    let start = program.start();
    assert_eq!(start.len(), n);
    let ineq = program.num_inequalities();
    let bounds = program.bounds();
    let eqs = program.equalities();
    let finite_bounds = bounds
        .iter()
        .map(|(l, u)| l.is_finite() as usize + u.is_finite() as usize)
        .sum::<usize>();
    let m = ineq + finite_bounds;

    let failure = |z: Vec<f64>, iterations| {
        let objective = program.objective(&z);
        SolverResult {
            point: z,
            objective,
            stationarity: f64::INFINITY,
            iterations,
            status: SolverStatus::NumericalFailure,
            stage_objectives: Vec::new(),
        }
    };

    let mut ws = Workspace {
        n,
        ineq,
        bounds,
        eqs,
        grad: vec![0.0; n],
        cgrad: vec![Vec::new(); ineq],
        cval: vec![0.0; ineq],
        hess: SymBand::zeros(n, program.bandwidth()),
    };

    if !strictly_feasible(program, &ws, &start) || !equalities_hold(&ws.eqs, &start, 1e-9) {
        return failure(start, 0);
    }
    #[cfg(debug_assertions)]
    debug_check_gradients(program, &start);

    let f_start = program.objective(&start);
    if !f_start.is_finite() {
        return failure(start, 0);
    }

    let mut z = start.clone();
    let mut mu = if m == 0 { 0.0 } else { 1.0 };
    let mut iterations = 0usize;
    let mut stage_objectives = Vec::new();
    let inner_tol = 0.1 * tol;
    let mut decrement_sq = f64::INFINITY;
    let mut status = SolverStatus::Converged;

    'stages: loop {
        loop {
            let Some(dir) = newton_direction(program, &mut ws, &z, mu) else {
                status = SolverStatus::NumericalFailure;
                break 'stages;
            };
            // λ² = -∇φᵀΔ for the minimized barrier objective φ = -(f + μ·barrier)
            decrement_sq = -dot(&ws.grad, &dir);
            if !decrement_sq.is_finite() {
                status = SolverStatus::NumericalFailure;
                break 'stages;
            }
            if decrement_sq / 2.0 <= inner_tol {
                break;
            }
            if iterations >= max_iter {
                status = SolverStatus::IterLimit;
                break 'stages;
            }
            iterations += 1;
            match line_search(program, &ws, &z, &dir, mu, decrement_sq) {
                Some(next) => z = next,
                None => break,
            }
        }
        stage_objectives.push(program.objective(&z));
        if m == 0 || m as f64 * mu <= tol {
            break;
        }
        mu /= 10.0;
    }

    let objective = program.objective(&z);
    if !objective.is_finite() {
        status = SolverStatus::NumericalFailure;
    }
    if status == SolverStatus::Converged && decrement_sq / 2.0 > tol {
        status = SolverStatus::NumericalFailure;
    }
    let stationarity = decrement_sq.max(0.0).sqrt();
    let (point, objective) = if objective < f_start {
        (start, f_start)
    } else {
        (z, objective)
    };
    SolverResult {
        point,
        objective,
        stationarity,
        iterations,
        status,
        stage_objectives,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn strictly_feasible<P: SmoothProgram + ?Sized>(program: &P, ws: &Workspace, z: &[f64]) -> bool {
    if z.iter().any(|v| !v.is_finite()) {
        return false;
    }
    for (j, &(lo, hi)) in ws.bounds.iter().enumerate() {
        if !(z[j] > lo && z[j] < hi) {
            return false;
        }
    }
    (0..ws.ineq).all(|i| program.inequality(i, z) < 0.0)
}

fn equalities_hold(eqs: &[LinearEquality], z: &[f64], tol: f64) -> bool {
    eqs.iter().all(|e| (dot(&e.row, z) - e.rhs).abs() <= tol)
}

/// Barrier objective to be minimized: `-(f + μ Σ log slack)`. `+∞` outside the domain.
fn barrier_value<P: SmoothProgram + ?Sized>(program: &P, ws: &Workspace, z: &[f64], mu: f64) -> f64 {
    let mut acc = 0.0;
    for (j, &(lo, hi)) in ws.bounds.iter().enumerate() {
        if lo.is_finite() {
            let s = z[j] - lo;
            if !(s > 0.0) {
                return f64::INFINITY;
            }
            acc += s.ln();
        }
        if hi.is_finite() {
            let s = hi - z[j];
            if !(s > 0.0) {
                return f64::INFINITY;
            }
            acc += s.ln();
        }
    }
    for i in 0..ws.ineq {
        let g = program.inequality(i, z);
        if !(g < 0.0) {
            return f64::INFINITY;
        }
        acc += (-g).ln();
    }
    let f = program.objective(z);
    if !f.is_finite() {
        return f64::INFINITY;
    }
    -(f + mu * acc)
}

/// Fills `ws.grad` with `∇φ` and returns the (equality-projected) Newton step.
fn newton_direction<P: SmoothProgram + ?Sized>(
    program: &P,
    ws: &mut Workspace,
    z: &[f64],
    mu: f64,
) -> Option<Vec<f64>> {
    let n = ws.n;
    program.objective_gradient(z, &mut ws.grad);
    ws.grad.iter_mut().for_each(|g| *g = -*g);
    ws.hess.clear();
    program.objective_hessian(z, -1.0, &mut ws.hess);

    if mu > 0.0 {
        for (j, &(lo, hi)) in ws.bounds.iter().enumerate() {
            if lo.is_finite() {
                let s = z[j] - lo;
                ws.grad[j] -= mu / s;
                ws.hess.add(j, j, mu / (s * s));
            }
            if hi.is_finite() {
                let s = hi - z[j];
                ws.grad[j] += mu / s;
                ws.hess.add(j, j, mu / (s * s));
            }
        }
        for i in 0..ws.ineq {
            let g = program.inequality(i, z);
            ws.cval[i] = g;
            let cg = &mut ws.cgrad[i];
            program.inequality_gradient(i, z, cg);
            let inv = -1.0 / g;
            for &(j, v) in cg.iter() {
                ws.grad[j] += mu * inv * v;
            }
            // entries of a constraint gradient carry distinct indices
            let w = mu * inv * inv;
            for (a, &(ja, va)) in cg.iter().enumerate() {
                for &(jb, vb) in &cg[..=a] {
                    ws.hess.add(ja, jb, w * va * vb);
                }
            }
            program.inequality_hessian(i, z, mu * inv, &mut ws.hess);
        }
    }
    if ws.grad.iter().any(|v| !v.is_finite()) {
        return None;
    }

    // Regularize until positive definite.
    let scale = ws.hess.max_abs_diagonal().max(1.0);
    let mut shift = 0.0;
    let factor = loop {
        let mut f = ws.hess.clone();
        if shift > 0.0 {
            f.add_diagonal(shift);
        }
        if f.cholesky_in_place() {
            break f;
        }
        shift = if shift == 0.0 { 1e-12 * scale } else { shift * 100.0 };
        if shift > 1e12 * scale {
            return None;
        }
    };

    let mut dir: Vec<f64> = ws.grad.iter().map(|g| -g).collect();
    factor.cholesky_solve(&mut dir);

    if !ws.eqs.is_empty() {
        let p = ws.eqs.len();
        let cols: Vec<Vec<f64>> = ws
            .eqs
            .iter()
            .map(|e| {
                let mut c = e.row.clone();
                factor.cholesky_solve(&mut c);
                c
            })
            .collect();
        let mut schur = vec![0.0; p * p];
        let mut rhs = vec![0.0; p];
        for a in 0..p {
            rhs[a] = dot(&ws.eqs[a].row, &dir);
            for b in 0..p {
                schur[a * p + b] = dot(&ws.eqs[a].row, &cols[b]);
            }
        }
        let nu = solve_dense(&mut schur, &mut rhs, p)?;
        for b in 0..p {
            for j in 0..n {
                dir[j] -= cols[b][j] * nu[b];
            }
        }
    }
    if dir.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(dir)
}

/// Gaussian elimination with partial pivoting for the small Schur system.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))?;
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            b.swap(piv, col);
        }
        for r in col + 1..n {
            let f = a[r * n + col] / a[col * n + col];
            for c in col..n {
                a[r * n + c] -= f * a[col * n + c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut v = b[r];
        for c in r + 1..n {
            v -= a[r * n + c] * x[c];
        }
        x[r] = v / a[r * n + r];
    }
    Some(x)
}

fn line_search<P: SmoothProgram + ?Sized>(
    program: &P,
    ws: &Workspace,
    z: &[f64],
    dir: &[f64],
    mu: f64,
    decrement_sq: f64,
) -> Option<Vec<f64>> {
    let phi0 = barrier_value(program, ws, z, mu);
    let slope = -decrement_sq;
    let mut t = 1.0;
    let mut trial = vec![0.0; z.len()];
    while t >= MIN_STEP {
        for j in 0..z.len() {
            trial[j] = z[j] + t * dir[j];
        }
        let phi = if mu > 0.0 {
            barrier_value(program, ws, &trial, mu)
        } else if strictly_feasible(program, ws, &trial) {
            -program.objective(&trial)
        } else {
            f64::INFINITY
        };
        if phi.is_finite() && phi <= phi0 + ARMIJO * t * slope + 4.0 * f64::EPSILON * phi0.abs() {
            return Some(trial);
        }
        t *= 0.5;
    }
    None
}

/// Central-difference check of the objective and constraint gradients at `z`.
/// Returns the worst `|analytic - fd| / (1 + |analytic|)`.
pub fn gradient_check<P: SmoothProgram + ?Sized>(program: &P, z: &[f64]) -> f64 {
    let n = program.dim();
    let mut worst = 0.0f64;
    let mut grad = vec![0.0; n];
    program.objective_gradient(z, &mut grad);
    let mut zp = z.to_vec();
    for j in 0..n {
        let h = 1e-6 * z[j].abs().max(1.0);
        zp[j] = z[j] + h;
        let fp = program.objective(&zp);
        zp[j] = z[j] - h;
        let fm = program.objective(&zp);
        zp[j] = z[j];
        let fd = (fp - fm) / (2.0 * h);
        worst = worst.max((grad[j] - fd).abs() / (1.0 + grad[j].abs()));
    }
    let mut sparse = Vec::new();
    for i in 0..program.num_inequalities() {
        program.inequality_gradient(i, z, &mut sparse);
        let mut dense = vec![0.0; n];
        for &(j, v) in &sparse {
            dense[j] += v;
        }
        for j in 0..n {
            let h = 1e-6 * z[j].abs().max(1.0);
            zp[j] = z[j] + h;
            let gp = program.inequality(i, &zp);
            zp[j] = z[j] - h;
            let gm = program.inequality(i, &zp);
            zp[j] = z[j];
            let fd = (gp - gm) / (2.0 * h);
            worst = worst.max((dense[j] - fd).abs() / (1.0 + dense[j].abs()));
        }
    }
    worst
}

#[cfg(debug_assertions)]
fn debug_check_gradients<P: SmoothProgram + ?Sized>(program: &P, z: &[f64]) {
    if program.dim() <= 24 {
        let err = gradient_check(program, z);
        debug_assert!(err <= 1e-5, "callback gradient disagrees with finite differences ({err:e})");
    }
}

#[cfg(test)]
mod tests;
