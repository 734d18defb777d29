//! Properties of the interior-point solver on random feasible programs.

mod common;

use freqsec::conic::{cone_margin, kkt_report, solve, Cone, ConicProgram, Settings, Status};
use proptest::prelude::*;

fn solve_default(p: &ConicProgram) -> freqsec::conic::ConicSolution {
    solve(p, &Settings::default())
}

#[test]
fn optimal_solves_meet_gap_stationarity_and_dual_cone() {
    let mut rng = common::rng(21);
    for k in 0..400 {
        let (p, x0) = common::random_program(&mut rng);
        let sol = solve_default(&p);
        assert_eq!(sol.status, Status::Optimal, "instance {k}");
        assert!(sol.gap <= 1e-8, "instance {k}: gap {}", sol.gap);
        let rep = kkt_report(&p, &sol);
        assert!(rep.stationarity <= 1e-6, "instance {k}: {rep:?}");
        assert!(rep.primal <= 1e-6, "instance {k}: {rep:?}");
        assert!(rep.cone_margin >= -1e-8, "instance {k}: {rep:?}");
        let mut start = 0;
        for &c in &p.cones {
            let zb = &sol.z[start..start + c.dim()];
            if let Cone::Soc(_) = c {
                let tail = zb[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(tail <= zb[0] + 1e-8, "instance {k}");
            }
            assert!(cone_margin(c, zb, true) >= -1e-8);
            start += c.dim();
        }
        // a known feasible point bounds the optimum
        assert!(sol.objective_value <= p.objective(&x0) + 1e-7);
    }
}

#[test]
fn rotated_cone_optimum_matches_grid_search() {
    let mut rng = common::rng(5);
    for k in 0..60 {
        let p = common::random_rotated_2d(&mut rng);
        let sol = solve_default(&p);
        assert_eq!(sol.status, Status::Optimal, "instance {k}");
        assert!(common::feasible(&p, &sol.x, 1e-7));
        let grid = common::grid_optimum(&p, 600, 3.0);
        let cn = p.c[0].abs() + p.c[1].abs();
        assert!(sol.objective_value <= grid + 1e-7, "instance {k}: {} vs grid {grid}", sol.objective_value);
        assert!(grid - sol.objective_value <= cn * 0.02, "instance {k}: {} vs grid {grid}", sol.objective_value);
    }
}

#[test]
fn iterates_obey_the_gap_identity_and_end_dual_bounded() {
    let mut rng = common::rng(8);
    for _ in 0..100 {
        let (p, _) = common::random_program(&mut rng);
        let sol = solve_default(&p);
        for it in &sol.trace {
            let scale = 1.0 + it.pcost.abs().max(it.dcost.abs());
            assert!((it.pcost - it.dcost - it.complementarity - it.residual_term).abs() <= 1e-8 * scale);
            assert!(it.complementarity >= -1e-12 * scale);
        }
        let last = sol.trace.last().unwrap();
        assert!(last.dcost <= last.pcost + 1e-7 * (1.0 + last.pcost.abs()));
    }
}

#[test]
fn kkt_report_catches_a_perturbed_dual() {
    let mut rng = common::rng(13);
    let mut checked = 0;
    for _ in 0..50 {
        let (p, _) = common::random_program(&mut rng);
        let mut sol = solve_default(&p);
        assert!(kkt_report(&p, &sol).stationarity <= 1e-6);
        // y_i enters stationarity through row i of A, z_r through row r of G
        let row = if p.a.rows == 0 {
            sol.z[0] += 1e-3;
            p.g.row(0).to_vec()
        } else {
            sol.y[0] += 1e-3;
            p.a.row(0).to_vec()
        };
        let weight = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(kkt_report(&p, &sol).stationarity >= 0.5e-3 * weight);
        checked += 1;
    }
    assert_eq!(checked, 50);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_scales_linearly(seed in 0u64..10_000, alpha in 0.01f64..100.0) {
        let (p, _) = common::random_program(&mut common::rng(seed));
        let base = solve_default(&p);
        let mut q = p.clone();
        q.c.iter_mut().for_each(|v| *v *= alpha);
        let scaled = solve_default(&q);
        prop_assert_eq!(scaled.status, Status::Optimal);
        prop_assert!((scaled.objective_value - alpha * base.objective_value).abs() <= 1e-6 * alpha * (1.0 + base.objective_value.abs()));
        // duals scale with the objective
        let rep = kkt_report(&q, &scaled);
        prop_assert!(rep.stationarity <= 1e-6 * alpha.max(1.0));
    }

    #[test]
    fn row_scaling_leaves_the_optimum_and_strong_duality(seed in 0u64..10_000, beta in 0.1f64..10.0) {
        let (p, _) = common::random_program(&mut common::rng(seed));
        let base = solve_default(&p);
        let mut q = p.clone();
        q.g.data.iter_mut().for_each(|v| *v *= beta);
        q.h.iter_mut().for_each(|v| *v *= beta);
        let scaled = solve_default(&q);
        prop_assert_eq!(scaled.status, Status::Optimal);
        prop_assert!((scaled.objective_value - base.objective_value).abs() <= 1e-6 * (1.0 + base.objective_value.abs()));
        // strong duality holds in both: cᵀx = bᵀy − hᵀz
        let dual = |s: &freqsec::conic::ConicSolution, p: &ConicProgram| {
            s.y.iter().zip(&p.b).map(|(a, b)| a * b).sum::<f64>() - s.z.iter().zip(&p.h).map(|(a, b)| a * b).sum::<f64>()
        };
        prop_assert!((dual(&scaled, &q) - scaled.objective_value).abs() <= 1e-6 * (1.0 + base.objective_value.abs()));
        prop_assert!((dual(&base, &p) - base.objective_value).abs() <= 1e-6 * (1.0 + base.objective_value.abs()));
    }

    #[test]
    fn variable_scaling_leaves_the_objective(seed in 0u64..10_000, gamma in 0.1f64..10.0) {
        // x = γ·x' substitutes c' = γc, A' = γA, G' = γG
        let (p, _) = common::random_program(&mut common::rng(seed));
        let base = solve_default(&p);
        let mut q = p.clone();
        q.c.iter_mut().for_each(|v| *v *= gamma);
        q.a.data.iter_mut().for_each(|v| *v *= gamma);
        q.g.data.iter_mut().for_each(|v| *v *= gamma);
        let scaled = solve_default(&q);
        prop_assert_eq!(scaled.status, Status::Optimal);
        prop_assert!((scaled.objective_value - base.objective_value).abs() <= 1e-6 * (1.0 + base.objective_value.abs()));
    }
}
