use std::f64::consts::PI;

use entropic_ot::measures::discretize_torus;
use entropic_ot::parabolic::torus_c_transform;
use entropic_ot::sinkhorn::{
    energy_diagnostics, entropic_cost, hilbert_distance, m_max, marginal_errors, plan_entry, rho_density,
    sinkhorn_step, softmin_update, DenseKernel,
};
use entropic_ot::torus::{TorusKernel, TorusKernelSpec};
use entropic_ot::{DensityField, Direction, KernelApplicator, KernelMode, Potential, SinkhornState, StopReason};
use proptest::prelude::*;

fn field(a: f64, b: f64, phase: f64) -> DensityField {
    DensityField::torus(move |x| a * (2.0 * PI * (x[0] + phase)).cos() + b * (4.0 * PI * x[0]).sin())
}

fn kernel(k: usize, f: (f64, f64, f64), g: (f64, f64, f64), mode: KernelMode) -> TorusKernel {
    TorusKernel::from_densities(
        &field(f.0, f.1, f.2),
        &field(g.0, g.1, g.2),
        k,
        1,
        TorusKernelSpec::GaussianCost,
        mode,
    )
    .unwrap()
}

fn coeffs() -> impl Strategy<Value = (f64, f64, f64)> {
    (-0.8f64..0.8, -0.5f64..0.5, 0.0f64..1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energies_are_monotone_and_columns_exact(f in coeffs(), g in coeffs(), k in 8usize..40) {
        let kern = kernel(k, f, g, KernelMode::ExactLog);
        let mut state = SinkhornState::zero(&kern).unwrap();
        state.run_steps(&kern, 40).unwrap();
        for w in state.trace().windows(2) {
            prop_assert!(w[1].f <= w[0].f + 1e-12);
            prop_assert!(w[1].i_mu <= w[0].i_mu + 1e-12);
            prop_assert!(w[1].l_nu >= w[0].l_nu - 1e-12);
        }
        prop_assert!(state.trace().iter().all(|r| r.e_col <= 1e-12));
        let (_, e_col) = marginal_errors(&state, &kern).unwrap();
        prop_assert!(e_col <= 1e-12);
    }

    #[test]
    fn steps_commute_with_constant_shifts(f in coeffs(), g in coeffs(), c in -5.0f64..5.0) {
        let kern = kernel(16, f, g, KernelMode::ExactLog);
        let u0: Vec<f64> = (0..16).map(|i| 0.01 * (i as f64).sin()).collect();
        let a = sinkhorn_step(SinkhornState::new(Potential::new(u0.clone(), 16.0).unwrap(), &kern).unwrap(), &kern).unwrap();
        let shifted: Vec<f64> = u0.iter().map(|x| x + c).collect();
        let b = sinkhorn_step(SinkhornState::new(Potential::new(shifted, 16.0).unwrap(), &kern).unwrap(), &kern).unwrap();
        let d = a.u().normalized().sup_distance(&b.u().normalized()).unwrap();
        prop_assert!(d < 1e-12, "normalized iterates differ by {d}");
        let diff: Vec<f64> = a.u().values().iter().zip(b.u().values()).map(|(x, y)| y - x).collect();
        prop_assert!(diff.iter().all(|d| (d - c).abs() < 1e-12));
    }

    #[test]
    fn density_integrates_to_one(f in coeffs(), g in coeffs(), seed in 0u64..1000) {
        let kern = kernel(24, f, g, KernelMode::ExactLog);
        let u: Vec<f64> = (0..24).map(|i| 0.05 * ((i as f64) * 0.7 + seed as f64).cos()).collect();
        let rho = rho_density(&Potential::new(u, 24.0).unwrap(), &kern).unwrap();
        let total: f64 = rho.iter().zip(kern.source().weights()).map(|(r, p)| r * p).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn accelerated_iterates_track_exact_ones(f in coeffs(), g in coeffs(), k in prop::sample::select(vec![16usize, 64, 256])) {
        let fast = kernel(k, f, g, KernelMode::Accelerated);
        let exact = fast.clone().with_mode(KernelMode::ExactLog);
        let mut a = SinkhornState::zero(&fast).unwrap();
        let mut b = SinkhornState::zero(&exact).unwrap();
        for _ in 0..15 {
            a.step(&fast).unwrap();
            b.step(&exact).unwrap();
            prop_assert!(a.u().sup_distance(b.u()).unwrap() < 1e-9);
        }
    }

    #[test]
    fn fixed_point_does_not_depend_on_the_start(f in coeffs(), g in coeffs(), c in -1.0f64..1.0) {
        let kern = kernel(12, f, g, KernelMode::ExactLog);
        let mut a = SinkhornState::zero(&kern).unwrap();
        let start: Vec<f64> = (0..12).map(|i| c * (2.0 * PI * i as f64 / 12.0).cos() * 0.05).collect();
        let mut b = SinkhornState::new(Potential::new(start, 12.0).unwrap(), &kern).unwrap();
        a.run_with_budget(&kern, 1e-13, 20_000).unwrap();
        b.run_with_budget(&kern, 1e-13, 20_000).unwrap();
        prop_assert!(hilbert_distance(a.u(), b.u()).unwrap() < 1e-8);
    }

    #[test]
    fn converged_density_is_flat(f in coeffs(), g in coeffs()) {
        let kern = kernel(16, f, g, KernelMode::ExactLog);
        let mut state = SinkhornState::zero(&kern).unwrap();
        let tol = 1e-9;
        prop_assert_eq!(state.run_with_budget(&kern, tol, 20_000).unwrap(), StopReason::Converged);
        let rho = rho_density(state.u(), &kern).unwrap();
        let worst = rho.iter().map(|r| r.ln().abs() / 16.0).fold(0.0, f64::max);
        let p_min = kern.source().weights().iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(worst <= tol / p_min, "sup |k⁻¹ log ρ| = {worst}");
    }

    #[test]
    fn energy_ignores_constants(f in coeffs(), g in coeffs(), c in -3.0f64..3.0) {
        let kern = kernel(16, f, g, KernelMode::ExactLog);
        let u = Potential::new((0..16).map(|i| 0.02 * i as f64).collect(), 16.0).unwrap();
        let a = energy_diagnostics(&u, &kern).unwrap();
        let b = energy_diagnostics(&u.shifted(c), &kern).unwrap();
        prop_assert!((a.f - b.f).abs() < 1e-12);
        prop_assert!((a.j - b.j).abs() < 1e-12);
    }
}

fn zero_cost_kernel(p: Vec<f64>, q: Vec<f64>) -> DenseKernel {
    let n = p.len();
    let m = q.len();
    let mu = discretize_custom(p);
    let nu = discretize_custom(q);
    DenseKernel::from_costs(mu, nu, 10.0, vec![0.0; n * m], KernelMode::ExactLog).unwrap()
}

fn discretize_custom(w: Vec<f64>) -> entropic_ot::DiscreteMeasure {
    let n = w.len();
    let pts = (0..n).map(|i| entropic_ot::ManifoldPoint::torus(&[i as f64 / n as f64]).unwrap()).collect();
    entropic_ot::DiscreteMeasure::new(pts, w).unwrap()
}

#[test]
fn zero_cost_gives_the_independent_coupling() {
    let p = vec![0.1, 0.2, 0.3, 0.4];
    let q = vec![0.5, 0.25, 0.25];
    let kern = zero_cost_kernel(p.clone(), q.clone());
    let state = sinkhorn_step(SinkhornState::zero(&kern).unwrap(), &kern).unwrap();
    let (e_row, e_col) = marginal_errors(&state, &kern).unwrap();
    assert!(e_row <= 1e-14 && e_col <= 1e-14);
    for (i, pi) in p.iter().enumerate() {
        for (j, qj) in q.iter().enumerate() {
            assert!((plan_entry(&state, &kern, i, j).unwrap() - pi * qj).abs() < 1e-15);
        }
    }
    assert!(rho_density(state.u(), &kern).unwrap().iter().all(|r| (r - 1.0).abs() < 1e-14));
    let e = energy_diagnostics(&Potential::zeros(4, 10.0).unwrap(), &kern).unwrap();
    assert!(e.f.abs() < 1e-15 && e.j.abs() < 1e-15, "{e:?}");
}

#[test]
fn symmetric_two_point_plan() {
    let t: f64 = 0.5;
    let half = vec![0.5, 0.5];
    let mu = discretize_custom(half.clone());
    let kern = DenseKernel::from_gibbs(mu.clone(), mu, 1.0, &[1.0, t, t, 1.0], KernelMode::ExactLog).unwrap();
    let mut state = SinkhornState::zero(&kern).unwrap();
    assert!(state.run_with_budget(&kern, 1e-9, 200).unwrap() == StopReason::Converged);
    assert!(state.m() < 200);
    let diag = plan_entry(&state, &kern, 0, 0).unwrap();
    let off = plan_entry(&state, &kern, 0, 1).unwrap();
    assert!((diag - 1.0 / 3.0).abs() < 1e-9 && (off - 1.0 / 6.0).abs() < 1e-9);
}

#[test]
fn identical_marginals_stop_after_one_step() {
    let kern = kernel(32, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0), KernelMode::ExactLog);
    let mut state = SinkhornState::zero(&kern).unwrap();
    let reason = state.run_until(&kern, 1e-6, 2.0).unwrap();
    assert_eq!(reason, StopReason::Converged);
    assert_eq!(state.m(), 1);
    assert!(entropic_cost(&state, &kern).unwrap().value.is_finite());
}

#[test]
fn schedule_uses_natural_log() {
    assert_eq!(m_max(32.0, 2.0).unwrap(), 222);
    assert!(m_max(32.0, 0.0).is_err());
}

#[test]
fn entropic_cost_at_the_uniform_fixed_point() {
    let mu = discretize_torus(&DensityField::constant(0.0), 16, 1).unwrap();
    let kern = TorusKernel::new(mu.clone(), mu, TorusKernelSpec::GaussianCost, KernelMode::ExactLog).unwrap();
    let mut state = SinkhornState::zero(&kern).unwrap();
    state.run_with_budget(&kern, 1e-12, 100).unwrap();
    let cost = entropic_cost(&state, &kern).unwrap();
    // At the constant fixed point u + v = k⁻¹ log of the mean kernel row.
    let mean_h: f64 = (0..16).map(|j| kern.kernel_value(0, j)).sum::<f64>() / 16.0;
    assert!((cost.value + mean_h.ln() / 16.0).abs() < 1e-12, "{}", cost.value);
    let shifted = -(state.u().shifted(0.7).values().iter().sum::<f64>()
        + state.v().shifted(-0.7).values().iter().sum::<f64>())
        / 16.0;
    assert!((shifted - cost.value).abs() < 1e-12);
    assert!(!cost.warning);
}

#[test]
fn softmin_approaches_the_c_transform() {
    let mut errs = Vec::new();
    for k in [64usize, 128] {
        let kern = kernel(k, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0), KernelMode::ExactLog);
        let u: Vec<f64> = (0..k).map(|i| 0.02 * (2.0 * PI * i as f64 / k as f64).cos()).collect();
        let v = softmin_update(&Potential::new(u.clone(), k as f64).unwrap(), Direction::XToY, &kern).unwrap();
        let uc = torus_c_transform(&u, kern.grid()).unwrap();
        errs.push(v.values().iter().zip(&uc).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let ratio = errs[0] / errs[1];
    assert!((1.3..=2.5).contains(&ratio), "ratio {ratio}, errors {errs:?}");
}
