use std::f64::consts::PI;

use entropic_ot::parabolic::{
    check_quasiconvex, circle_ot_oracle, circle_transport, solve_parabolic, torus_c_transform, ParabolicProblem,
};
use entropic_ot::stationary_phase::stationary_phase_check;
use entropic_ot::torus::TorusGrid;
use entropic_ot::{DensityField, DiscreteMeasure};
use proptest::prelude::*;

fn dyadic(values: Vec<f64>) -> Vec<f64> {
    values.into_iter().map(|x| (x * 1024.0).round() / 1024.0).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn c_transform_reverses_order(
        u in prop::collection::vec(-0.3f64..0.3, 32),
        bump in prop::collection::vec(0.0f64..0.2, 32),
    ) {
        let grid = TorusGrid::new(1, 32).unwrap();
        let v: Vec<f64> = u.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let uc = torus_c_transform(&u, grid).unwrap();
        let vc = torus_c_transform(&v, grid).unwrap();
        prop_assert!(uc.iter().zip(&vc).all(|(a, b)| a >= b));
        let ucc = torus_c_transform(&uc, grid).unwrap();
        prop_assert!(ucc.iter().zip(&u).all(|(a, b)| a <= b));
    }

    #[test]
    fn triple_transform_equals_single(u in prop::collection::vec(-0.5f64..0.5, 32)) {
        let grid = TorusGrid::new(1, 32).unwrap();
        let u = dyadic(u);
        let uc = torus_c_transform(&u, grid).unwrap();
        let uccc = torus_c_transform(&torus_c_transform(&uc, grid).unwrap(), grid).unwrap();
        prop_assert_eq!(uc, uccc);
    }

    #[test]
    fn circle_cost_is_rotation_invariant(
        p in prop::collection::vec(0.01f64..1.0, 16),
        q in prop::collection::vec(0.01f64..1.0, 16),
        shift in 0usize..16,
    ) {
        let grid = TorusGrid::new(1, 16).unwrap();
        let norm = |w: &[f64]| { let s: f64 = w.iter().sum(); w.iter().map(|x| x / s).collect::<Vec<_>>() };
        let (p, q) = (norm(&p), norm(&q));
        let rotate = |w: &[f64]| (0..16).map(|i| w[(i + 16 - shift) % 16]).collect::<Vec<_>>();
        let measure = |w: Vec<f64>| DiscreteMeasure::new(grid.points(), w).unwrap();
        let base = circle_ot_oracle(&measure(p.clone()), &measure(q.clone())).unwrap();
        let moved = circle_ot_oracle(&measure(rotate(&p)), &measure(rotate(&q))).unwrap();
        prop_assert!((base.cost - moved.cost).abs() < 1e-12);
    }

    #[test]
    fn trajectory_shifts_with_the_initial_constant(c in -2.0f64..2.0) {
        let grid = TorusGrid::new(1, 32).unwrap();
        let f = DensityField::torus(|x| 0.3 * (2.0 * PI * x[0]).cos());
        let g = DensityField::torus(|x| 0.2 * (2.0 * PI * x[0]).sin());
        let problem = ParabolicProblem::new(grid, &f, &g).unwrap();
        let dt = problem.default_dt();
        let times = [0.01, 0.02];
        let base = solve_parabolic(&problem, vec![0.0; 32], dt, &times).unwrap();
        let moved = solve_parabolic(&problem, vec![c; 32], dt, &times).unwrap();
        for (a, b) in base.iter().zip(&moved) {
            prop_assert!(a.u.iter().zip(&b.u).all(|(x, y)| (y - x - c).abs() < 1e-12));
        }
    }
}

#[test]
fn oracle_beats_arbitrary_plans() {
    let x: Vec<f64> = (0..6).map(|i| i as f64 / 6.0).collect();
    let p = [0.1, 0.3, 0.05, 0.25, 0.2, 0.1];
    let q = [0.2, 0.1, 0.3, 0.1, 0.15, 0.15];
    let best = circle_transport(&x, &p, &x, &q).unwrap();
    // Northwest-corner plans for every cyclic relabelling of the targets are feasible.
    for r in 0..6 {
        let order: Vec<usize> = (0..6).map(|j| (j + r) % 6).collect();
        let (mut i, mut jj) = (0, 0);
        let (mut pi, mut qj) = (p[0], q[order[0]]);
        let mut cost = 0.0;
        while i < 6 && jj < 6 {
            let mass = pi.min(qj);
            let d = entropic_ot::measures::periodic_gap(x[i] - x[order[jj]]);
            cost += 0.5 * d * d * mass;
            pi -= mass;
            qj -= mass;
            if pi <= 1e-15 {
                i += 1;
                pi = if i < 6 { p[i] } else { 0.0 };
            }
            if qj <= 1e-15 {
                jj += 1;
                qj = if jj < 6 { q[order[jj]] } else { 0.0 };
            }
        }
        assert!(best.cost <= cost + 1e-14, "relabelling {r}: {} > {cost}", best.cost);
    }
}

#[test]
fn discrete_legendre_relation() {
    let coarse = legendre_gap(512);
    let fine = legendre_gap(1024);
    assert!(coarse * 512.0 < 64.0 && fine * 1024.0 < 64.0, "gaps {coarse} {fine}");
    assert!(coarse / fine > 1.5, "gaps {coarse} {fine} do not shrink with dx");
}

fn legendre_gap(k: usize) -> f64 {
    let grid = TorusGrid::new(1, k).unwrap();
    let dx = 1.0 / k as f64;
    let amp = 0.02;
    let u: Vec<f64> = (0..k).map(|i| amp * (2.0 * PI * i as f64 * dx).cos()).collect();
    assert!(check_quasiconvex(&u, grid).unwrap().ok);
    let uc = torus_c_transform(&u, grid).unwrap();
    let s = (k as f64).sqrt().round() as usize / 2;
    let h = s as f64 * dx;
    let mut worst = 0.0f64;
    for i in (0..k).step_by(37) {
        let x = i as f64 * dx;
        let upp = -amp * 4.0 * PI * PI * (2.0 * PI * x).cos();
        let y = x - amp * 2.0 * PI * (2.0 * PI * x).sin();
        let j = ((y * k as f64).round() as i64).rem_euclid(k as i64) as usize;
        let ucpp = (uc[(j + s) % k] - 2.0 * uc[j] + uc[(j + k - s) % k]) / (h * h);
        worst = worst.max(((1.0 + upp) * (1.0 + ucpp) - 1.0).abs());
    }
    worst
}

#[test]
fn lattice_sum_ignores_summation_order() {
    // A transposed phase enumerates the same lattice values in a different order.
    let alpha = DensityField::torus(|x| {
        (1.0 - (2.0 * PI * x[0]).cos()) / (4.0 * PI * PI) + (1.0 - (2.0 * PI * x[1]).cos()) / (2.0 * PI * PI)
    });
    let beta = DensityField::torus(|x| {
        (1.0 - (2.0 * PI * x[1]).cos()) / (4.0 * PI * PI) + (1.0 - (2.0 * PI * x[0]).cos()) / (2.0 * PI * PI)
    });
    let h = DensityField::torus(|x| 1.0 + 0.1 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin());
    let a = stationary_phase_check(&alpha, &h, &[0.0, 0.0], 32).unwrap();
    let b = stationary_phase_check(&beta, &h, &[0.0, 0.0], 32).unwrap();
    assert!((a.lhs - b.lhs).abs() < 1e-12 * a.lhs, "{a:?} {b:?}");
}
