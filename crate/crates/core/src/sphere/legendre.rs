use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Associated Legendre function `P_l^m(x)` with the Condon–Shortley phase,
/// by upward recurrence in `l` from `P_m^m = (-1)^m (2m-1)!! (1-x²)^{m/2}`.
pub fn assoc_legendre(l: usize, m: usize, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(x));
    }
    if m > l {
        return Err(Error::InvalidArgument(format!("order {m} exceeds degree {l}")));
    }
    let s = (1.0 - x * x).sqrt();
    let mut pmm = 1.0;
    for i in 1..=m {
        pmm *= -((2 * i - 1) as f64) * s;
    }
    if l == m {
        return Ok(pmm);
    }
    let mut prev = pmm;
    let mut cur = x * (2 * m + 1) as f64 * pmm;
    for ll in m + 2..=l {
        let next = ((2 * ll - 1) as f64 * x * cur - (ll + m - 1) as f64 * prev) / (ll - m) as f64;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Orthonormal Legendre functions `P̄_l^m(cos θ)` for `0 ≤ m ≤ l ≤ lmax`,
/// indexed by `l(l+1)/2 + m`.
pub fn normalized_legendre(lmax: usize, theta: f64) -> Vec<f64> {
    let (s, x) = theta.sin_cos();
    let mut out = vec![0.0; (lmax + 1) * (lmax + 2) / 2];
    let tri = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            pmm *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        out[tri(m, m)] = pmm;
        if m < lmax {
            out[tri(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * x * pmm;
        }
        for l in m + 2..=lmax {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            out[tri(l, m)] = a * (x * out[tri(l - 1, m)] - b * out[tri(l - 2, m)]);
        }
    }
    out
}

/// Upward recurrence for `P̄_l^m(cos θ_j)` over all rings of a grid. Only the
/// diagonal seeds `P̄_m^m` and the recurrence coefficients are stored, so
/// memory is `O(W²)`; rows are produced in the same floating-point order as
/// [`normalized_legendre`].
#[derive(Clone, Debug)]
pub(crate) struct LegendreRecurrence {
    lmax: usize,
    n_rings: usize,
    cos: Vec<f64>,
    /// `P̄_m^m` per order, `(lmax + 1) × n_rings`.
    seeds: Vec<f64>,
    /// Recurrence coefficients `(a, b)` indexed by `l(l+1)/2 + m`.
    coeffs: Vec<(f64, f64)>,
}

impl LegendreRecurrence {
    pub(crate) fn new(lmax: usize, thetas: &[f64]) -> Self {
        let n_rings = thetas.len();
        let mut seeds = vec![0.0; (lmax + 1) * n_rings];
        let mut cos = Vec::with_capacity(n_rings);
        for (j, &t) in thetas.iter().enumerate() {
            let (s, x) = t.sin_cos();
            cos.push(x);
            let mut pmm = 1.0 / (4.0 * PI).sqrt();
            for m in 0..=lmax {
                if m > 0 {
                    pmm *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
                }
                seeds[m * n_rings + j] = pmm;
            }
        }
        let mut coeffs = vec![(0.0, 0.0); (lmax + 1) * (lmax + 2) / 2];
        for l in 2..=lmax {
            for m in 0..=l - 2 {
                let (lf, mf) = (l as f64, m as f64);
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
                coeffs[l * (l + 1) / 2 + m] = (a, b);
            }
        }
        LegendreRecurrence { lmax, n_rings, cos, seeds, coeffs }
    }

    pub(crate) fn lmax(&self) -> usize {
        self.lmax
    }

    /// Call `visit(l, row)` for `l = m..=lmax` with `row[j] = P̄_l^m(cos θ_j)`.
    pub(crate) fn sweep(&self, m: usize, mut visit: impl FnMut(usize, &[f64])) {
        let nt = self.n_rings;
        let mut prev = self.seeds[m * nt..(m + 1) * nt].to_vec();
        visit(m, &prev);
        if m == self.lmax {
            return;
        }
        let c = ((2 * m + 3) as f64).sqrt();
        let mut cur: Vec<f64> = prev.iter().zip(&self.cos).map(|(p, x)| c * x * p).collect();
        visit(m + 1, &cur);
        for l in m + 2..=self.lmax {
            let (a, b) = self.coeffs[l * (l + 1) / 2 + m];
            for ((p, c), x) in prev.iter_mut().zip(&cur).zip(&self.cos) {
                *p = a * (x * c - b * *p);
            }
            std::mem::swap(&mut prev, &mut cur);
            visit(l, &cur);
        }
    }
}
