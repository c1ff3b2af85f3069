use std::f64::consts::PI;

use super::Sht;
use crate::error::{Error, Result};
use crate::numeric::{gauss_legendre, legendre_polynomials};

/// Heat multipliers `e^{-t l(l+1)}` for `l = 0..=W`.
pub fn heat_multipliers(t: f64, bandwidth: usize) -> Result<Vec<f64>> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("heat time {t} must be nonnegative")));
    }
    Ok((0..=bandwidth).map(|l| (-t * (l * (l + 1)) as f64).exp()).collect())
}

/// Legendre coefficients `c_l` of `2^k (1 - s)^k = Σ_{l ≤ k} c_l P_l(s)`,
/// by Gauss–Legendre projection with `k + 1` nodes (exact for the degree-`2k` integrands).
pub fn antenna_legendre_coefficients(k: usize) -> Vec<f64> {
    let (nodes, weights) = gauss_legendre(k + 1);
    let mut c = vec![0.0; k + 1];
    for (&s, &w) in nodes.iter().zip(&weights) {
        let f = (2.0 * (1.0 - s)).powi(k as i32);
        for (l, p) in legendre_polynomials(k, s).into_iter().enumerate() {
            c[l] += w * f * p;
        }
    }
    for (l, cl) in c.iter_mut().enumerate() {
        *cl *= (2 * l + 1) as f64 / 2.0;
    }
    c
}

/// Multipliers of the kernel `|x - y|^{2k} = 2^k (1 - x·y)^k` on harmonics
/// of degree `l ≤ W`; zero above degree `k`.
pub fn antenna_multipliers(k: usize, bandwidth: usize) -> Result<Vec<f64>> {
    if bandwidth < k {
        return Err(Error::Bandwidth { required: k, available: bandwidth });
    }
    let c = antenna_legendre_coefficients(k);
    Ok((0..=bandwidth)
        .map(|l| c.get(l).map_or(0.0, |cl| 4.0 * PI * cl / (2 * l + 1) as f64))
        .collect())
}

/// Kernel value `Σ_l λ_l (2l+1)/(4π) P_l(s)` of a radial kernel with multipliers `λ_l`.
pub fn radial_kernel_value(multipliers: &[f64], s: f64) -> f64 {
    if multipliers.is_empty() {
        return 0.0;
    }
    let p = legendre_polynomials(multipliers.len() - 1, s.clamp(-1.0, 1.0));
    multipliers
        .iter()
        .zip(p)
        .enumerate()
        .map(|(l, (lam, pl))| lam * (2 * l + 1) as f64 / (4.0 * PI) * pl)
        .sum()
}

/// Matrix product `aᵢ = Σⱼ K(xᵢ·xⱼ) bⱼ` for a radial kernel band-limited to
/// the grid, via one analysis and one synthesis.
pub fn radial_matrix_apply(sht: &Sht, multipliers: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let mut c = sht.analysis(b)?;
    c.scale_degrees(multipliers);
    sht.inverse(&c)
}

/// Band-limited heat operator on fields: `a = Σ e^{-t l(l+1)} ⟨f, Y_l^m⟩ Y_l^m`,
/// with the inner product taken by grid quadrature.
pub fn bandlimited_heat_apply(sht: &Sht, values: &[f64], t: f64) -> Result<Vec<f64>> {
    let lambda = heat_multipliers(t, sht.bandwidth())?;
    let mut c = sht.forward(values)?;
    c.scale_degrees(&lambda);
    sht.inverse(&c)
}

/// Matrix product with the antenna kernel, `aᵢ = Σⱼ |xᵢ - xⱼ|^{2k} bⱼ`.
pub fn antenna_kernel_apply(sht: &Sht, b: &[f64], k: usize) -> Result<Vec<f64>> {
    let lambda = antenna_multipliers(k, sht.bandwidth())?;
    radial_matrix_apply(sht, &lambda, b)
}
