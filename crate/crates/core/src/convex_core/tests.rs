use super::*;

/// maximize -‖z‖² subject to Σz = 1, z ≥ 0.
struct SimplexNorm {
    k: usize,
}

impl SmoothProgram for SimplexNorm {
    fn dim(&self) -> usize {
        self.k
    }
    fn start(&self) -> Vec<f64> {
        (0..self.k).map(|i| (i + 1) as f64).map(|v| v / (self.k * (self.k + 1) / 2) as f64).collect()
    }
    fn objective(&self, z: &[f64]) -> f64 {
        -z.iter().map(|v| v * v).sum::<f64>()
    }
    fn objective_gradient(&self, z: &[f64], grad: &mut [f64]) {
        for (g, v) in grad.iter_mut().zip(z) {
            *g = -2.0 * v;
        }
    }
    fn objective_hessian(&self, _z: &[f64], scale: f64, hess: &mut SymBand) {
        for j in 0..self.k {
            hess.add(j, j, -2.0 * scale);
        }
    }
    fn equalities(&self) -> Vec<LinearEquality> {
        vec![LinearEquality {
            row: vec![1.0; self.k],
            rhs: 1.0,
        }]
    }
    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, f64::INFINITY); self.k]
    }
}

/// maximize c·z over a box.
struct LinearBox {
    c: Vec<f64>,
}

impl SmoothProgram for LinearBox {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn start(&self) -> Vec<f64> {
        vec![0.5; self.c.len()]
    }
    fn objective(&self, z: &[f64]) -> f64 {
        dot(&self.c, z)
    }
    fn objective_gradient(&self, _z: &[f64], grad: &mut [f64]) {
        grad.copy_from_slice(&self.c);
    }
    fn objective_hessian(&self, _z: &[f64], _scale: f64, _hess: &mut SymBand) {}
    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0); self.c.len()]
    }
}

/// maximize Σ log(z_i + a_i) subject to Σz ≤ 1 (as a nonlinear-callback
/// inequality), z ≥ 0.
struct WaterFill {
    a: Vec<f64>,
}

impl SmoothProgram for WaterFill {
    fn dim(&self) -> usize {
        self.a.len()
    }
    fn start(&self) -> Vec<f64> {
        vec![1.0 / (self.a.len() + 1) as f64; self.a.len()]
    }
    fn objective(&self, z: &[f64]) -> f64 {
        z.iter().zip(&self.a).map(|(z, a)| (z + a).ln()).sum()
    }
    fn objective_gradient(&self, z: &[f64], grad: &mut [f64]) {
        for j in 0..z.len() {
            grad[j] = 1.0 / (z[j] + self.a[j]);
        }
    }
    fn objective_hessian(&self, z: &[f64], scale: f64, hess: &mut SymBand) {
        for j in 0..z.len() {
            hess.add(j, j, -scale / (z[j] + self.a[j]).powi(2));
        }
    }
    fn num_inequalities(&self) -> usize {
        1
    }
    fn inequality(&self, _i: usize, z: &[f64]) -> f64 {
        z.iter().sum::<f64>() - 1.0
    }
    fn inequality_gradient(&self, _i: usize, z: &[f64], grad: &mut Vec<(usize, f64)>) {
        grad.clear();
        grad.extend((0..z.len()).map(|j| (j, 1.0)));
    }
    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, f64::INFINITY); self.a.len()]
    }
}

/// Independent water-filling oracle: bisection on the water level S with
/// z_i = max(0, S - a_i), Σ z_i = 1.
fn water_fill_oracle(a: &[f64]) -> Vec<f64> {
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..200 {
        let s = 0.5 * (lo + hi);
        let total: f64 = a.iter().map(|ai| (s - ai).max(0.0)).sum();
        if total > 1.0 {
            hi = s;
        } else {
            lo = s;
        }
    }
    a.iter().map(|ai| (lo - ai).max(0.0)).collect()
}

#[test]
fn simplex_projection() {
    let r = maximize(&SimplexNorm { k: 3 }, 1e-10, 500);
    assert!(r.converged(), "{r:?}");
    for v in &r.point {
        assert!((v - 1.0 / 3.0).abs() < 1e-6);
    }
    assert!((r.objective + 1.0 / 3.0).abs() < 1e-9);
    assert!((r.point.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn linear_over_box() {
    let r = maximize(&LinearBox { c: vec![1.0, -1.0] }, 1e-10, 500);
    assert!(r.converged());
    assert!((r.point[0] - 1.0).abs() < 1e-9);
    assert!(r.point[1].abs() < 1e-9);
    assert!((r.objective - 1.0).abs() < 1e-9);
}

#[test]
fn water_filling_closed_form() {
    let a = [0.1, 0.5];
    let oracle = water_fill_oracle(&a);
    assert!((oracle[0] - 0.7).abs() < 1e-12 && (oracle[1] - 0.3).abs() < 1e-12);
    let r = maximize(&WaterFill { a: a.to_vec() }, 1e-10, 500);
    assert!(r.converged());
    assert!((r.point[0] - 0.7).abs() < 1e-7);
    assert!((r.point[1] - 0.3).abs() < 1e-7);
    assert!((r.objective - 2.0 * 0.8f64.ln()).abs() < 1e-9);
}

#[test]
fn water_filling_with_inactive_channel() {
    let a = [0.05, 0.3, 1.5];
    let oracle = water_fill_oracle(&a);
    assert_eq!(oracle[2], 0.0);
    let r = maximize(&WaterFill { a: a.to_vec() }, 1e-10, 500);
    assert!(r.converged());
    for (x, y) in r.point.iter().zip(&oracle) {
        assert!((x - y).abs() < 1e-7);
    }
}

#[test]
fn deterministic() {
    let p = WaterFill { a: vec![0.2, 0.01, 0.4] };
    let a = maximize(&p, 1e-9, 500);
    let b = maximize(&p, 1e-9, 500);
    assert_eq!(a.point, b.point);
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
}

#[test]
fn stage_trace_is_monotone() {
    let r = maximize(&WaterFill { a: vec![0.2, 0.01, 0.4] }, 1e-10, 500);
    for w in r.stage_objectives.windows(2) {
        assert!(w[1] >= w[0] - 1e-12, "{:?}", r.stage_objectives);
    }
}

#[test]
fn never_worse_than_start() {
    for a in [vec![0.1, 0.5], vec![1.0, 1.0, 1.0], vec![0.0001, 3.0]] {
        let p = WaterFill { a };
        let r = maximize(&p, 1e-8, 500);
        assert!(r.objective >= p.objective(&p.start()) - 1e-12);
    }
}

#[test]
fn infeasible_start_is_reported() {
    struct Bad;
    impl SmoothProgram for Bad {
        fn dim(&self) -> usize {
            1
        }
        fn start(&self) -> Vec<f64> {
            vec![-1.0]
        }
        fn objective(&self, z: &[f64]) -> f64 {
            z[0]
        }
        fn objective_gradient(&self, _z: &[f64], g: &mut [f64]) {
            g[0] = 1.0;
        }
        fn objective_hessian(&self, _z: &[f64], _s: f64, _h: &mut SymBand) {}
        fn bounds(&self) -> Vec<(f64, f64)> {
            vec![(0.0, 1.0)]
        }
    }
    assert_eq!(maximize(&Bad, 1e-8, 100).status, SolverStatus::NumericalFailure);
}

#[test]
fn iteration_limit_is_reported() {
    let r = maximize(&WaterFill { a: vec![0.1, 0.5] }, 1e-12, 2);
    assert_eq!(r.status, SolverStatus::IterLimit);
}

/// maximize -(z-c)ᵀ(z-c) + z₀z₁-coupled terms over the unit disc, dimension ≤ 3,
/// compared against an exhaustive grid.
struct DiscQuadratic {
    center: Vec<f64>,
}

impl SmoothProgram for DiscQuadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn start(&self) -> Vec<f64> {
        vec![0.0; self.center.len()]
    }
    fn objective(&self, z: &[f64]) -> f64 {
        let mut v = 0.0;
        for j in 0..z.len() {
            v -= (z[j] - self.center[j]).powi(2);
        }
        v - 0.5 * (z[0] - z[z.len() - 1]).powi(2)
    }
    fn objective_gradient(&self, z: &[f64], g: &mut [f64]) {
        let n = z.len();
        for j in 0..n {
            g[j] = -2.0 * (z[j] - self.center[j]);
        }
        let d = z[0] - z[n - 1];
        g[0] -= d;
        g[n - 1] += d;
    }
    fn objective_hessian(&self, z: &[f64], scale: f64, h: &mut SymBand) {
        let n = z.len();
        for j in 0..n {
            h.add(j, j, -2.0 * scale);
        }
        if n > 1 {
            h.add(0, 0, -scale);
            h.add(n - 1, n - 1, -scale);
            h.add(n - 1, 0, scale);
        }
    }
    fn num_inequalities(&self) -> usize {
        1
    }
    fn inequality(&self, _i: usize, z: &[f64]) -> f64 {
        z.iter().map(|v| v * v).sum::<f64>() - 1.0
    }
    fn inequality_gradient(&self, _i: usize, z: &[f64], g: &mut Vec<(usize, f64)>) {
        g.clear();
        g.extend(z.iter().enumerate().map(|(j, v)| (j, 2.0 * v)));
    }
    fn inequality_hessian(&self, _i: usize, z: &[f64], scale: f64, h: &mut SymBand) {
        for j in 0..z.len() {
            h.add(j, j, 2.0 * scale);
        }
    }
}

#[test]
fn matches_grid_oracle_in_small_dimension() {
    let tol = 1e-8;
    for center in [vec![2.0, 0.3], vec![0.2, -0.1], vec![0.8, -1.5, 0.4]] {
        let p = DiscQuadratic { center: center.clone() };
        let r = maximize(&p, tol, 500);
        assert!(r.converged());
        let steps = if center.len() == 2 { 801 } else { 161 };
        let grid: Vec<f64> = (0..steps).map(|i| -1.0 + 2.0 * i as f64 / (steps - 1) as f64).collect();
        let mut best = f64::NEG_INFINITY;
        let mut visit = |z: &[f64]| {
            if z.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
                best = best.max(p.objective(z));
            }
        };
        if center.len() == 2 {
            for &a in &grid {
                for &b in &grid {
                    visit(&[a, b]);
                }
            }
        } else {
            for &a in &grid {
                for &b in &grid {
                    for &c in &grid {
                        visit(&[a, b, c]);
                    }
                }
            }
        }
        // the grid is a feasible subset, so it can only under-estimate
        assert!(r.objective >= best - tol * (1.0 + best.abs()), "{} < {best}", r.objective);
        let spacing = 2.0 / (steps - 1) as f64;
        assert!(r.objective - best <= 20.0 * spacing, "{} vs {best}", r.objective);
    }
}

#[test]
fn gradient_check_flags_wrong_gradients() {
    struct Wrong;
    impl SmoothProgram for Wrong {
        fn dim(&self) -> usize {
            1
        }
        fn start(&self) -> Vec<f64> {
            vec![0.3]
        }
        fn objective(&self, z: &[f64]) -> f64 {
            z[0] * z[0]
        }
        fn objective_gradient(&self, _z: &[f64], g: &mut [f64]) {
            g[0] = 1.0;
        }
        fn objective_hessian(&self, _z: &[f64], _s: f64, _h: &mut SymBand) {}
    }
    assert!(gradient_check(&Wrong, &[0.3]) > 0.1);
    assert!(gradient_check(&WaterFill { a: vec![0.1, 0.2] }, &[0.3, 0.3]) < 1e-7);
}
