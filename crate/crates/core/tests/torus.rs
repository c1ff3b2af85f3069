use entropic_ot::measures::discretize_torus;
use entropic_ot::torus::{fft_apply, torus_cost, torus_heat_kernel, TorusGrid, TorusKernel, TorusKernelSpec};
use entropic_ot::{DensityField, Direction, KernelApplicator, KernelMode};
use proptest::prelude::*;

fn brute_cost(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut best = f64::INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        let mut s = 0.0;
        for d in 0..n {
            let m = (c % 3) as f64 - 1.0;
            c /= 3;
            s += (x[d] + m - y[d]).powi(2);
        }
        best = best.min(0.5 * s);
    }
    best
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cost_is_a_half_squared_periodic_metric((x, y, s) in (1usize..4).prop_flat_map(|n| (point(n), point(n), point(n)))) {
        let c = torus_cost(&x, &y);
        prop_assert!((c - torus_cost(&y, &x)).abs() == 0.0);
        prop_assert!(c >= 0.0);
        prop_assert!((c - brute_cost(&x, &y)).abs() < 1e-15);
        let xs: Vec<f64> = x.iter().zip(&s).map(|(a, b)| (a + b).rem_euclid(1.0)).collect();
        let ys: Vec<f64> = y.iter().zip(&s).map(|(a, b)| (a + b).rem_euclid(1.0)).collect();
        prop_assert!((torus_cost(&xs, &ys) - c).abs() < 1e-14);
        prop_assert_eq!(torus_cost(&x, &x), 0.0);
    }

    #[test]
    fn fft_application_is_linear(
        b1 in prop::collection::vec(0.0f64..1.0, 64),
        b2 in prop::collection::vec(0.0f64..1.0, 64),
        alpha in 0.1f64..3.0, beta in 0.1f64..3.0,
        two_d in any::<bool>(),
    ) {
        let grid = if two_d { TorusGrid::new(2, 8).unwrap() } else { TorusGrid::new(1, 64).unwrap() };
        let spec = TorusKernelSpec::GaussianCost;
        let combo: Vec<f64> = b1.iter().zip(&b2).map(|(x, y)| alpha * x + beta * y + 1e-3).collect();
        let lhs = fft_apply(&combo, grid, spec).unwrap();
        let a1 = fft_apply(&b1.iter().map(|x| x + 1e-3 / (alpha + beta)).collect::<Vec<_>>(), grid, spec).unwrap();
        let a2 = fft_apply(&b2.iter().map(|x| x + 1e-3 / (alpha + beta)).collect::<Vec<_>>(), grid, spec).unwrap();
        let scale = lhs.iter().copied().fold(0.0, f64::max);
        for i in 0..64 {
            prop_assert!((lhs[i] - alpha * a1[i] - beta * a2[i]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn heat_kernel_is_even(d in -0.5f64..0.5, t in 0.005f64..0.2) {
        prop_assert_eq!(torus_heat_kernel(&[d], t, 3), torus_heat_kernel(&[-d], t, 3));
    }
}

#[test]
fn wrap_around_cost() {
    assert!((torus_cost(&[0.9], &[0.1]) - 0.02).abs() < 1e-15);
}

#[test]
fn gaussian_kernel_values_lie_in_the_unit_interval() {
    for (n, k) in [(1usize, 64usize), (2, 16)] {
        let mu = TorusGrid::new(n, k).unwrap().uniform_measure().unwrap();
        let kern = TorusKernel::new(mu.clone(), mu, TorusKernelSpec::GaussianCost, KernelMode::ExactLog).unwrap();
        assert_eq!(kern.kernel_value(0, 0), 1.0);
        for j in 0..kern.grid().len() {
            let h = kern.kernel_value(0, j);
            assert!(h > 0.0 && h <= 1.0);
        }
    }
}

#[test]
fn delta_and_constant_inputs() {
    let grid = TorusGrid::new(1, 32).unwrap();
    let mu = grid.uniform_measure().unwrap();
    let kern = TorusKernel::new(mu.clone(), mu, TorusKernelSpec::GaussianCost, KernelMode::Accelerated).unwrap();
    let mut delta = vec![0.0; 32];
    delta[0] = 1.0;
    let row = kern.convolve(&delta).unwrap();
    for (i, r) in row.iter().enumerate() {
        assert!((r - kern.kernel_value(i, 0)).abs() < 1e-12);
    }
    let ones = fft_apply(&[1.0; 32], grid, TorusKernelSpec::GaussianCost).unwrap();
    let total: f64 = (0..32).map(|j| kern.kernel_value(0, j)).sum();
    assert!(ones.iter().all(|a| (a - total).abs() < 1e-12 * total));
}

#[test]
fn heat_kernel_matches_its_spectral_series() {
    let t = 0.05;
    let spectral: f64 = (-50i32..=50).map(|j| (-4.0 * std::f64::consts::PI.powi(2) * (j * j) as f64 * t).exp()).sum();
    assert!((torus_heat_kernel(&[0.0], t, 3) - spectral).abs() < 1e-10);
    assert!((torus_heat_kernel(&[0.3], t, 2) - torus_heat_kernel(&[0.3], t, 3)).abs() < 1e-12);
}

#[test]
fn heat_backend_agrees_across_modes() {
    let f = DensityField::torus(|x| 0.2 * (2.0 * std::f64::consts::PI * x[0]).sin());
    let mu = discretize_torus(&f, 64, 1).unwrap();
    let nu = discretize_torus(&DensityField::constant(0.0), 64, 1).unwrap();
    let fast = TorusKernel::new(mu, nu, TorusKernelSpec::heat_default(64.0), KernelMode::Accelerated).unwrap();
    let b: Vec<f64> = (0..64).map(|i| 1.0 + 0.5 * (i as f64 * 0.3).cos()).collect();
    let a = fast.apply_kernel(Direction::XToY, &b).unwrap();
    let d = fast.convolve_direct(&b).unwrap();
    for (x, y) in a.iter().zip(&d) {
        assert!((x - y).abs() <= 1e-10 * y.abs());
    }
}
