//! Discrete stationary phase on the torus lattice `Λ_k = (k⁻¹ℤ / ℤ)ⁿ`:
//!
//! ```text
//! k^{-n/2} Σ_{x ∈ Λ_k} e^{-k α(x)} h(x)  ≈  (2π)^{n/2} e^{-k α(x₀)} h(x₀) / √det ∇²α(x₀)
//! ```
//!
//! with error `O(1/k)` when `α` has a unique non-degenerate minimum at `x₀`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{DensityField, ManifoldPoint};
use crate::numeric::pairwise_sum;
use crate::torus::TorusGrid;

/// Finite-difference step for the Hessian at the critical point.
pub const HESSIAN_STEP: f64 = 1e-4;
/// Refinement of the trapezoid reference integral relative to the lattice.
pub const REFERENCE_REFINEMENT: usize = 16;

const GRADIENT_TOLERANCE: f64 = 1e-6;
const LATTICE_TOLERANCE: f64 = 1e-12;

/// Lattice sum, Laplace approximation and their distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseComparison {
    pub lhs: f64,
    pub rhs: f64,
    pub err: f64,
    /// `ln lhs` computed without forming `e^{-k α}` at the minimum.
    pub log_lhs: f64,
    /// `ln rhs`, likewise.
    pub log_rhs: f64,
}

fn eval_at(f: &DensityField, x: &[f64]) -> f64 {
    f.eval(&ManifoldPoint::Torus(x.to_vec()))
}

fn second_differences(alpha: &DensityField, x0: &[f64], h: f64) -> Vec<f64> {
    let n = x0.len();
    let c = eval_at(alpha, x0);
    let shifted = |offsets: &[(usize, f64)]| {
        let mut x = x0.to_vec();
        for &(d, s) in offsets {
            x[d] += s;
        }
        eval_at(alpha, &x)
    };
    let mut hess = vec![0.0; n * n];
    for a in 0..n {
        hess[a * n + a] = (shifted(&[(a, h)]) - 2.0 * c + shifted(&[(a, -h)])) / (h * h);
        for b in a + 1..n {
            let v = (shifted(&[(a, h), (b, h)]) - shifted(&[(a, h), (b, -h)]) - shifted(&[(a, -h), (b, h)])
                + shifted(&[(a, -h), (b, -h)]))
                / (4.0 * h * h);
            hess[a * n + b] = v;
            hess[b * n + a] = v;
        }
    }
    hess
}

/// Hessian of `α` at `x` by centered differences with one Richardson step.
pub fn hessian(alpha: &DensityField, x: &[f64]) -> Vec<f64> {
    let coarse = second_differences(alpha, x, HESSIAN_STEP);
    let fine = second_differences(alpha, x, HESSIAN_STEP / 2.0);
    coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect()
}

fn gradient(alpha: &DensityField, x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|d| {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[d] += HESSIAN_STEP;
            m[d] -= HESSIAN_STEP;
            (eval_at(alpha, &p) - eval_at(alpha, &m)) / (2.0 * HESSIAN_STEP)
        })
        .collect()
}

/// Determinant of a positive-definite 1×1 or 2×2 Hessian.
fn positive_determinant(hess: &[f64], n: usize) -> Result<f64> {
    let (det, min_eig) = if n == 1 {
        (hess[0], hess[0])
    } else {
        let (a, b, d) = (hess[0], hess[1], hess[3]);
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (a * d - b * b, mean - rad)
    };
    if !(min_eig > 0.0 && det.is_finite()) {
        return Err(Error::DegenerateCriticalPoint(format!("Hessian eigenvalue {min_eig} is not positive")));
    }
    Ok(det)
}

fn compare(alpha: &DensityField, h: &DensityField, x0: &[f64], k: usize) -> Result<PhaseComparison> {
    let n = x0.len();
    if n == 0 || n > 2 {
        return Err(Error::InvalidArgument(format!("dimension {n} not supported; use 1 or 2")));
    }
    let grid = TorusGrid::new(n, k)?;
    let hess = hessian(alpha, x0);
    let det = positive_determinant(&hess, n)?;
    let grad = gradient(alpha, x0);
    let scale = hess.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if grad.iter().any(|g| g.abs() > GRADIENT_TOLERANCE * scale.max(1.0)) {
        return Err(Error::DegenerateCriticalPoint(format!("gradient {grad:?} at the claimed minimum")));
    }
    let kf = k as f64;
    let a0 = eval_at(alpha, x0);
    let h0 = eval_at(h, x0);
    let terms: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.coords(i);
            (-kf * (eval_at(alpha, &x) - a0)).exp() * eval_at(h, &x)
        })
        .collect();
    if let Some(i) = terms.iter().position(|t| !t.is_finite()) {
        return Err(Error::NonFinite(format!("lattice term {i}; α may not be minimal at x₀")));
    }
    let half_n = n as f64 / 2.0;
    let rel_lhs = kf.powf(-half_n) * pairwise_sum(&terms);
    let rel_rhs = (2.0 * std::f64::consts::PI).powf(half_n) * h0 / det.sqrt();
    let factor = (-kf * a0).exp();
    let (lhs, rhs) = (factor * rel_lhs, factor * rel_rhs);
    Ok(PhaseComparison { lhs, rhs, err: (lhs - rhs).abs(), log_lhs: rel_lhs.ln() - kf * a0, log_rhs: rel_rhs.ln() - kf * a0 })
}

/// Compare the lattice sum with its Laplace approximation for `x₀ ∈ Λ_k`.
pub fn stationary_phase_check(alpha: &DensityField, h: &DensityField, x0: &[f64], k: usize) -> Result<PhaseComparison> {
    let kf = k as f64;
    if x0.iter().any(|x| {
        let s = x * kf;
        (s - s.round()).abs() > LATTICE_TOLERANCE * kf.max(1.0)
    }) {
        return Err(Error::InvalidArgument(format!("{x0:?} is not a point of the lattice with k = {k}")));
    }
    compare(alpha, h, x0, k)
}

/// Same comparison for a minimum anywhere on the torus, typically off the lattice.
pub fn shifted_lattice_check(alpha: &DensityField, h: &DensityField, x0: &[f64], k: usize) -> Result<PhaseComparison> {
    compare(alpha, h, x0, k)
}

fn trapezoid_axis(radius: f64, k: usize) -> (Vec<f64>, Vec<f64>) {
    let dx = (k as f64).sqrt().recip() / REFERENCE_REFINEMENT as f64;
    let intervals = (2.0 * radius / dx).ceil() as usize;
    let step = 2.0 * radius / intervals as f64;
    let nodes = (0..=intervals).map(|i| -radius + i as f64 * step).collect();
    let weights = (0..=intervals).map(|i| if i == 0 || i == intervals { step / 2.0 } else { step }).collect();
    (nodes, weights)
}

/// `|k^{-n/2} Σ h(z) - ∫ h|` over the scaled lattice `z ∈ k^{-1/2}ℤⁿ` inside the
/// polydisc window `|zᵢ| ≤ ln k`, the integral by a refined trapezoid rule.
pub fn local_density_error(h: impl Fn(&[f64]) -> f64 + Sync, n: usize, k: usize) -> Result<f64> {
    if n == 0 || n > 2 {
        return Err(Error::InvalidArgument(format!("dimension {n} not supported; use 1 or 2")));
    }
    if k < 3 {
        return Err(Error::InvalidGrid(format!("k = {k} gives an empty window")));
    }
    let kf = k as f64;
    let radius = kf.ln();
    let spacing = kf.sqrt().recip();
    let reach = (radius / spacing).floor() as i64;
    let lattice: Vec<f64> = (-reach..=reach).map(|j| j as f64 * spacing).collect();
    let (nodes, weights) = trapezoid_axis(radius, k);
    let (sum, integral) = if n == 1 {
        let s: Vec<f64> = lattice.iter().map(|&z| h(&[z])).collect();
        let q: Vec<f64> = nodes.iter().zip(&weights).map(|(&z, w)| w * h(&[z])).collect();
        (pairwise_sum(&s), pairwise_sum(&q))
    } else {
        let s: Vec<f64> = lattice
            .par_iter()
            .map(|&a| pairwise_sum(&lattice.iter().map(|&b| h(&[a, b])).collect::<Vec<_>>()))
            .collect();
        let q: Vec<f64> = nodes
            .par_iter()
            .zip(&weights)
            .map(|(&a, wa)| wa * pairwise_sum(&nodes.iter().zip(&weights).map(|(&b, wb)| wb * h(&[a, b])).collect::<Vec<_>>()))
            .collect();
        (pairwise_sum(&s), pairwise_sum(&q))
    };
    let value = spacing.powi(n as i32) * sum - integral;
    if !value.is_finite() {
        return Err(Error::NonFinite("local density error".into()));
    }
    Ok(value.abs())
}

/// `(1 - cos 2πx) / 4π²`, shifted to have its minimum at `center`; `α(center) = 0`, `α'' = 1`.
pub fn standard_phase(center: f64) -> DensityField {
    let four_pi_sq = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
    DensityField::torus(move |x| (1.0 - (2.0 * std::f64::consts::PI * (x[0] - center)).cos()) / four_pi_sq)
}
