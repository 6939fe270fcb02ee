use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::allocation::allocation_objective;
use crate::channel::rate_matrix;
use crate::convex_core::gradient_check;
use crate::fairness::FairnessFactor;
use crate::scenario::ScenarioConfig;

const TOL: f64 = 1e-9;

fn config(users: Vec<Point>, q_i: Point, q_f: Point, slots: usize, horizon: f64) -> ScenarioConfig {
    ScenarioConfig {
        users,
        q_initial: q_i,
        q_final: q_f,
        altitude: 500.0,
        v_max: 40.0,
        horizon,
        slots,
        bandwidth_total: 10e6,
        power_total: 0.1,
        noise_psd_dbm_hz: -169.0,
        ref_gain_db: -50.0,
        rician: RicianParams::REFERENCE,
    }
}

fn two_user() -> Scenario {
    Scenario::from_config(config(
        vec![[-400.0, 300.0], [500.0, 100.0]],
        [-300.0, -400.0],
        [300.0, -400.0],
        20,
        20.0,
    ))
    .unwrap()
}

fn uniform(s: &Scenario) -> Allocation {
    Allocation::uniform(s.num_users(), s.num_slots(), 1.0 / (s.num_users() + 1) as f64)
}

fn dense(h: &SymBand) -> Vec<Vec<f64>> {
    let n = h.dim();
    (0..n).map(|i| (0..n).map(|j| h.get(i, j)).collect()).collect()
}

#[test]
fn lower_bound_is_global_and_tight() {
    let s = two_user();
    let (q, slack) = initial_trajectory(&s);
    let exp = build_expansion(&s, &uniform(&s), &q, &slack).unwrap();
    let rates = rate_matrix(&s, &q, &uniform(&s));
    for k in 0..2 {
        for n in 0..s.num_slots() {
            let at = exp.lower_bound_rate(k, n, q.points()[n], slack[(k, n)]);
            assert!((at - rates[(k, n)]).abs() <= 1e-12 * rates[(k, n)].max(1.0));
            assert!((at - exp.rate_with_slack(k, n, q.points()[n], slack[(k, n)])).abs() <= 1e-12);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let k = rng.gen_range(0..2);
        let n = rng.gen_range(0..s.num_slots());
        let p = [rng.gen_range(-1500.0..1500.0), rng.gen_range(-1500.0..1500.0)];
        let theta = rng.gen_range(-6.0..3.0);
        let lb = exp.lower_bound_rate(k, n, p, theta);
        let exact = exp.rate_with_slack(k, n, p, theta);
        assert!(lb <= exact + 1e-12, "lb {lb} > exact {exact}");
        let tb = exp.theta_lower_bound(k, n, p);
        assert!(tb <= elevation_ratio(p, s.users()[k], s.altitude()) + 1e-15);
    }
}

#[test]
fn program_derivatives_match_finite_differences() {
    let s = Scenario::from_config(config(
        vec![[-200.0, 100.0], [250.0, -50.0]],
        [-60.0, 0.0],
        [60.0, 0.0],
        4,
        8.0,
    ))
    .unwrap();
    let (q, slack) = initial_trajectory(&s);
    let exp = build_expansion(&s, &uniform(&s), &q, &slack).unwrap();
    for objective in [Objective::Weighted(0.0), Objective::Weighted(0.4), Objective::MaxMin] {
        let prog = StepProgram::new(&exp, &s, objective);
        let mut shifted: Vec<Point> = q.points().to_vec();
        shifted[1][1] += 7.0;
        shifted[2][0] -= 5.0;
        let mut z = prog.pack(&shifted, &slack, Some(&[0.01, 0.02, 0.03, 0.04]));
        for (k, n) in [(0, 1), (1, 2)] {
            let o = prog.theta_index[k * 4 + n].unwrap();
            z[o] -= 0.3;
        }
        assert!(gradient_check(&prog, &z) < 1e-6);

        let mut hess = SymBand::zeros(prog.dim(), prog.bandwidth());
        prog.objective_hessian(&z, 1.0, &mut hess);
        let hd = dense(&hess);
        let mut gp = vec![0.0; prog.dim()];
        let mut gm = vec![0.0; prog.dim()];
        for j in 0..prog.dim() {
            let h = 1e-5 * z[j].abs().max(1.0);
            let mut zp = z.clone();
            zp[j] += h;
            prog.objective_gradient(&zp, &mut gp);
            zp[j] -= 2.0 * h;
            prog.objective_gradient(&zp, &mut gm);
            for i in 0..prog.dim() {
                let fd = (gp[i] - gm[i]) / (2.0 * h);
                assert!((hd[i][j] - fd).abs() <= 1e-5 * (1.0 + fd.abs()), "H[{i}][{j}] {} vs {fd}", hd[i][j]);
            }
        }
        for c in 0..prog.num_inequalities() {
            let mut hess = SymBand::zeros(prog.dim(), prog.bandwidth());
            prog.inequality_hessian(c, &z, 1.0, &mut hess);
            let hd = dense(&hess);
            let mut sparse = Vec::new();
            for j in 0..prog.dim() {
                let h = 1e-5 * z[j].abs().max(1.0);
                let grad_at = |zz: &[f64], out: &mut Vec<(usize, f64)>| {
                    prog.inequality_gradient(c, zz, out);
                    let mut d = vec![0.0; prog.dim()];
                    for &(i, v) in out.iter() {
                        d[i] += v;
                    }
                    d
                };
                let mut zp = z.clone();
                zp[j] += h;
                let a = grad_at(&zp, &mut sparse);
                zp[j] -= 2.0 * h;
                let b = grad_at(&zp, &mut sparse);
                for i in 0..prog.dim() {
                    let fd = (a[i] - b[i]) / (2.0 * h);
                    assert!((hd[i][j] - fd).abs() <= 1e-5 * (1.0 + fd.abs()));
                }
            }
        }
    }
}

#[test]
fn single_user_trajectory_moves_toward_user() {
    let s = Scenario::from_config(config(vec![[0.0, 0.0]], [600.0, 0.0], [600.0, 0.0], 20, 20.0)).unwrap();
    let (q, slack) = initial_trajectory(&s);
    let step = solve_trajectory_step(&s, &uniform(&s), &q, &slack, 0.0, TOL).unwrap();
    assert!(step.moved);
    let t = &step.trajectory;
    assert!(t.max_violation(&s) <= 1e-6);
    assert_eq!(t.points()[0], [600.0, 0.0]);
    assert_eq!(t.points()[19], [600.0, 0.0]);
    for p in &t.points()[1..19] {
        assert!(p[0] < 600.0 - 1.0, "{p:?}");
        assert!(p[1].abs() < 1e-6);
    }
}

#[test]
fn symmetric_users_keep_trajectory_on_bisector() {
    let s = Scenario::from_config(config(
        vec![[-400.0, 300.0], [400.0, 300.0]],
        [0.0, -500.0],
        [0.0, -500.0],
        16,
        16.0,
    ))
    .unwrap();
    let (q, slack) = initial_trajectory(&s);
    for alpha in [0.0, 0.3] {
        let step = solve_trajectory_step(&s, &uniform(&s), &q, &slack, alpha, TOL).unwrap();
        for p in step.trajectory.points() {
            assert!(p[0].abs() < 1e-4, "{p:?}");
        }
        assert!(step.trajectory.points()[8][1] > -500.0 + 100.0);
    }
    let step = solve_maxmin_trajectory_step(&s, &uniform(&s), &q, &slack, TOL).unwrap();
    for p in step.trajectory.points() {
        assert!(p[0].abs() < 1e-4, "{p:?}");
    }
}

#[test]
fn single_user_weighted_and_maxmin_agree() {
    let s = Scenario::from_config(config(vec![[200.0, 300.0]], [-300.0, 0.0], [300.0, 0.0], 20, 20.0)).unwrap();
    let (q, slack) = initial_trajectory(&s);
    let a = solve_trajectory_step(&s, &uniform(&s), &q, &slack, 0.7, TOL).unwrap();
    let b = solve_maxmin_trajectory_step(&s, &uniform(&s), &q, &slack, TOL).unwrap();
    for (p, r) in a.trajectory.points().iter().zip(b.trajectory.points()) {
        assert!(horizontal_gap(*p, *r) < 1e-3, "{p:?} vs {r:?}");
    }
    assert!((a.surrogate - b.surrogate).abs() < 1e-8 * a.surrogate.abs().max(1.0));
}

fn horizontal_gap(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[test]
fn maxmin_eta_is_slot_minimum() {
    let s = two_user();
    let (q, slack) = initial_trajectory(&s);
    let alloc = uniform(&s);
    let step = solve_maxmin_trajectory_step(&s, &alloc, &q, &slack, TOL).unwrap();
    let eta = step.eta.as_ref().unwrap();
    let exp = build_expansion(&s, &alloc, &q, &slack).unwrap();
    for (n, e) in eta.iter().enumerate() {
        let lo = (0..2)
            .map(|k| exp.lower_bound_rate(k, n, step.trajectory.points()[n], step.slack[(k, n)]))
            .fold(f64::INFINITY, f64::min);
        assert!((e - lo).abs() < 1e-12);
    }
    assert!(step.surrogate >= step.surrogate_at_expansion);
}

#[test]
fn zero_allocation_returns_input() {
    let s = two_user();
    let (q, slack) = initial_trajectory(&s);
    let zero = Allocation::zeros(2, s.num_slots());
    let step = solve_trajectory_step(&s, &zero, &q, &slack, 0.2, TOL).unwrap();
    assert!(!step.moved);
    assert_eq!(step.trajectory, q);
    assert_eq!(step.slack, slack);
}

#[test]
fn vanishing_bandwidth_with_power_is_degenerate() {
    let s = two_user();
    let (q, slack) = initial_trajectory(&s);
    let mut b = uniform(&s).bandwidth().clone();
    b[(1, 3)] = 1e-12;
    let alloc = Allocation::new(b, uniform(&s).power().clone()).unwrap();
    let err = solve_trajectory_step(&s, &alloc, &q, &slack, 0.2, TOL).unwrap_err();
    assert!(matches!(err, Error::DegenerateAllocation { user: 1, slot: 3 }));
}

#[test]
fn step_is_feasible_and_ascends_true_objective() {
    let s = two_user();
    let (q, slack) = initial_trajectory(&s);
    let alloc = uniform(&s);
    for alpha in [0.0, 0.1, 0.5] {
        let f = FairnessFactor::new(alpha).unwrap();
        let step = solve_trajectory_step(&s, &alloc, &q, &slack, alpha, TOL).unwrap();
        assert!(step.trajectory.max_violation(&s) <= 1e-6);
        let before = allocation_objective(&s, &q, &alloc, f);
        let after = allocation_objective(&s, &step.trajectory, &alloc, f);
        assert!((step.surrogate_at_expansion - before).abs() < 1e-12);
        assert!(step.surrogate >= before);
        assert!(after >= step.surrogate - 1e-12, "after {after} surrogate {}", step.surrogate);
    }
    let step = solve_maxmin_trajectory_step(&s, &alloc, &q, &slack, TOL).unwrap();
    let f = FairnessFactor::MaxMin;
    assert!(allocation_objective(&s, &step.trajectory, &alloc, f) >= allocation_objective(&s, &q, &alloc, f));
}

#[test]
fn zero_slack_corridor_returns_input() {
    // endpoints exactly one full step per slot apart: only the line is feasible
    let s = Scenario::from_config(config(vec![[0.0, 300.0]], [-380.0, 0.0], [380.0, 0.0], 20, 20.0)).unwrap();
    let (q, slack) = initial_trajectory(&s);
    let step = solve_trajectory_step(&s, &uniform(&s), &q, &slack, 0.0, TOL).unwrap();
    assert!(!step.moved);
    assert_eq!(step.trajectory, q);
}

#[test]
fn initial_trajectory_examples() {
    let s = Scenario::from_config(config(vec![[50.0, 0.0]], [0.0, 0.0], [100.0, 0.0], 3, 6.0)).unwrap();
    let (q, slack) = initial_trajectory(&s);
    assert_eq!(q.points(), &[[0.0, 0.0], [50.0, 0.0], [100.0, 0.0]]);
    let r = RicianParams::REFERENCE;
    assert!((slack[(0, 1)] - (r.b1 + r.b2)).abs() < 1e-15);
    assert!(slack[(0, 0)] < slack[(0, 1)]);
}

#[test]
fn overhead_expansion_reproduces_channel_rate() {
    let s = Scenario::from_config(config(vec![[0.0, 0.0]], [0.0, 0.0], [0.0, 0.0], 4, 4.0)).unwrap();
    let (q, slack) = initial_trajectory(&s);
    let exp = build_expansion(&s, &Allocation::uniform(1, 4, 1.0), &q, &slack).unwrap();
    for n in 0..4 {
        assert!((exp.base_rate[(0, n)] - 4.811_512_983_204_245).abs() < 1e-12);
        assert!(exp.psi[(0, n)] > 0.0 && exp.phi[(0, n)] > 0.0);
        assert!(exp.x0[(0, n)] > 1.0 && exp.y0[(0, n)] >= 500.0 * 500.0);
    }
}
