use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::legendre::LegendreRecurrence;
use super::SphericalGrid;
use crate::error::{Error, Result};

/// Complex harmonic coefficients `b̂_{l,m}`, `0 ≤ l ≤ W`, `|m| ≤ l`, stored at `l² + l + m`.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicCoeffs {
    bandwidth: usize,
    data: Vec<Complex64>,
}

impl HarmonicCoeffs {
    pub fn zeros(bandwidth: usize) -> Self {
        HarmonicCoeffs { bandwidth, data: vec![Complex64::default(); (bandwidth + 1).pow(2)] }
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn index(l: usize, m: i64) -> usize {
        ((l * l + l) as i64 + m) as usize
    }

    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        self.data[Self::index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, value: Complex64) {
        self.data[Self::index(l, m)] = value;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Multiply every degree-`l` coefficient by `multipliers[l]`.
    pub fn scale_degrees(&mut self, multipliers: &[f64]) {
        for l in 0..=self.bandwidth {
            let lam = multipliers.get(l).copied().unwrap_or(0.0);
            for z in &mut self.data[l * l..(l + 1) * (l + 1)] {
                *z *= lam;
            }
        }
    }

    /// Largest `|a - b|` over coefficients of degree at most `min` of both bandwidths.
    pub fn max_abs_diff(&self, other: &HarmonicCoeffs) -> f64 {
        let n = (self.bandwidth.min(other.bandwidth) + 1).pow(2);
        self.data[..n].iter().zip(&other.data[..n]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Spherical harmonic transforms on an equiangular grid, by an FFT along
/// each latitude ring followed by a Legendre sum per order `m`; `O(W³)`.
#[derive(Clone)]
pub struct Sht {
    grid: SphericalGrid,
    legendre: LegendreRecurrence,
    area_weights: Vec<f64>,
    forward_fft: Arc<dyn Fft<f64>>,
    inverse_fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Sht {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Sht").field("bandwidth", &self.grid.bandwidth()).finish()
    }
}

impl Sht {
    pub fn new(grid: SphericalGrid) -> Self {
        let legendre = LegendreRecurrence::new(grid.bandwidth(), grid.thetas());
        let mut planner = FftPlanner::new();
        let forward_fft = planner.plan_fft_forward(grid.n_phi());
        let inverse_fft = planner.plan_fft_inverse(grid.n_phi());
        let area_weights = grid.area_weights();
        Sht { grid, legendre, area_weights, forward_fft, inverse_fft }
    }

    pub fn grid(&self) -> &SphericalGrid {
        &self.grid
    }

    pub fn bandwidth(&self) -> usize {
        self.legendre.lmax()
    }

    fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.grid.len() {
            return Err(Error::LengthMismatch { expected: self.grid.len(), actual: values.len() });
        }
        Ok(())
    }

    /// Unweighted analysis `Σⱼ bⱼ conj(Y_l^m(xⱼ))`.
    pub fn analysis(&self, b: &[f64]) -> Result<HarmonicCoeffs> {
        self.check_len(b)?;
        let w = self.bandwidth();
        let (nt, np) = (self.grid.n_theta(), self.grid.n_phi());
        let mut rings: Vec<Complex64> = b.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward_fft.process(&mut rings);
        // Transpose to per-frequency rows over rings: pos[m][j], neg[m][j].
        let mut pos = vec![Complex64::default(); (w + 1) * nt];
        let mut neg = vec![Complex64::default(); (w + 1) * nt];
        for j in 0..nt {
            let ring = &rings[j * np..(j + 1) * np];
            for m in 0..=w {
                pos[m * nt + j] = ring[m];
                neg[m * nt + j] = ring[(np - m) % np];
            }
        }
        let mut out = HarmonicCoeffs::zeros(w);
        for m in 0..=w {
            let fp = &pos[m * nt..(m + 1) * nt];
            let fn_ = &neg[m * nt..(m + 1) * nt];
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            self.legendre.sweep(m, |l, p| {
                let mut sp = Complex64::default();
                let mut sn = Complex64::default();
                for j in 0..nt {
                    sp += fp[j] * p[j];
                    sn += fn_[j] * p[j];
                }
                out.set(l, m as i64, sp);
                if m > 0 {
                    out.set(l, -(m as i64), sn * sign);
                }
            });
        }
        Ok(out)
    }

    /// Quadrature-weighted forward transform `Σⱼ ωⱼ fⱼ conj(Y_l^m(xⱼ))`, exact
    /// for fields of degree at most `W`.
    pub fn forward(&self, values: &[f64]) -> Result<HarmonicCoeffs> {
        self.check_len(values)?;
        let weighted: Vec<f64> = values.iter().zip(&self.area_weights).map(|(v, w)| v * w).collect();
        self.analysis(&weighted)
    }

    /// Synthesis `Re Σ c_{l,m} Y_l^m(xᵢ)` at the grid nodes.
    pub fn inverse(&self, coeffs: &HarmonicCoeffs) -> Result<Vec<f64>> {
        let w = self.bandwidth();
        if coeffs.bandwidth() > w {
            return Err(Error::Bandwidth { required: coeffs.bandwidth(), available: w });
        }
        let cw = coeffs.bandwidth();
        let (nt, np) = (self.grid.n_theta(), self.grid.n_phi());
        let mut rings = vec![Complex64::default(); nt * np];
        let mut gp = vec![Complex64::default(); nt];
        let mut gn = vec![Complex64::default(); nt];
        for m in 0..=cw {
            gp.iter_mut().for_each(|z| *z = Complex64::default());
            gn.iter_mut().for_each(|z| *z = Complex64::default());
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            self.legendre.sweep(m, |l, p| {
                if l > cw {
                    return;
                }
                let cp = coeffs.get(l, m as i64);
                let cn = if m > 0 { coeffs.get(l, -(m as i64)) * sign } else { Complex64::default() };
                for j in 0..nt {
                    gp[j] += cp * p[j];
                    gn[j] += cn * p[j];
                }
            });
            for j in 0..nt {
                rings[j * np + m] += gp[j];
                if m > 0 {
                    rings[j * np + np - m] += gn[j];
                }
            }
        }
        self.inverse_fft.process(&mut rings);
        Ok(rings.iter().map(|z| z.re).collect())
    }
}

/// Quadrature-weighted forward transform; see [`Sht::forward`].
pub fn sht_forward(sht: &Sht, values: &[f64]) -> Result<HarmonicCoeffs> {
    sht.forward(values)
}

/// Synthesis at the grid nodes; see [`Sht::inverse`].
pub fn sht_inverse(sht: &Sht, coeffs: &HarmonicCoeffs) -> Result<Vec<f64>> {
    sht.inverse(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_real_coeffs(w: usize, seed: u64) -> HarmonicCoeffs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = HarmonicCoeffs::zeros(w);
        for l in 0..=w {
            c.set(l, 0, Complex64::new(rng.gen_range(-1.0..1.0), 0.0));
            for m in 1..=l as i64 {
                let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                c.set(l, m, z);
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                c.set(l, -m, z.conj() * sign);
            }
        }
        c
    }

    #[test]
    fn constant_field_has_only_the_constant_mode() {
        let sht = Sht::new(SphericalGrid::new(6).unwrap());
        let c = sht.forward(&vec![1.0; sht.grid().len()]).unwrap();
        // ∫ 1 · Y_0^0 dA = 4π / √(4π) = √(4π).
        assert!((c.get(0, 0).re - (4.0 * PI).sqrt()).abs() < 1e-13);
        for (i, z) in c.as_slice().iter().enumerate().skip(1) {
            assert!(z.norm() < 1e-12, "coefficient {i} = {z}");
        }
    }

    #[test]
    fn real_part_of_y32_has_two_coefficients() {
        let grid = SphericalGrid::new(8).unwrap();
        let sht = Sht::new(grid.clone());
        let mut c = HarmonicCoeffs::zeros(8);
        c.set(3, 2, Complex64::new(1.0, 0.0));
        let y32 = sht.inverse(&c).unwrap();
        let back = sht.forward(&y32).unwrap();
        for l in 0..=8usize {
            for m in -(l as i64)..=l as i64 {
                let z = back.get(l, m);
                if l == 3 && m.abs() == 2 {
                    assert!((z.norm() - 0.5).abs() < 1e-12);
                } else {
                    assert!(z.norm() < 1e-10, "({l},{m}) = {z}");
                }
            }
        }
    }

    #[test]
    fn y10_is_proportional_to_cos_theta() {
        let grid = SphericalGrid::new(4).unwrap();
        let sht = Sht::new(grid.clone());
        let mut c = HarmonicCoeffs::zeros(4);
        c.set(1, 0, Complex64::new(1.0, 0.0));
        let f = sht.inverse(&c).unwrap();
        let scale = (3.0 / (4.0 * PI)).sqrt();
        for (i, v) in f.iter().enumerate() {
            assert!((v - scale * grid.unit_vector(i)[2]).abs() < 1e-14);
        }
        assert!(sht.inverse(&HarmonicCoeffs::zeros(4)).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn roundtrip_identity_on_coefficients() {
        for w in [8, 16, 32] {
            let sht = Sht::new(SphericalGrid::new(w).unwrap());
            let c = random_real_coeffs(w, w as u64);
            let back = sht.forward(&sht.inverse(&c).unwrap()).unwrap();
            assert!(back.max_abs_diff(&c) < 1e-10, "W={w}: {}", back.max_abs_diff(&c));
        }
    }

    #[test]
    fn analysis_matches_direct_sum() {
        let grid = SphericalGrid::new(3).unwrap();
        let sht = Sht::new(grid.clone());
        let b: Vec<f64> = (0..grid.len()).map(|i| ((i * 7) % 5) as f64 - 1.5).collect();
        let c = sht.analysis(&b).unwrap();
        for l in 0..=3usize {
            let table: Vec<Vec<f64>> = grid.thetas().iter().map(|&t| super::super::normalized_legendre(3, t)).collect();
            for m in -(l as i64)..=l as i64 {
                let ma = m.unsigned_abs() as usize;
                let mut direct = Complex64::default();
                for (i, bi) in b.iter().enumerate() {
                    let (j, k) = grid.node(i);
                    let mut p = table[j][l * (l + 1) / 2 + ma];
                    if m < 0 && ma % 2 == 1 {
                        p = -p;
                    }
                    let y = Complex64::from_polar(p, m as f64 * grid.phis()[k]);
                    direct += y.conj() * bi;
                }
                assert!((direct - c.get(l, m)).norm() < 1e-13, "({l},{m})");
            }
        }
    }

    #[test]
    fn bandwidth_mismatch_rejected() {
        let sht = Sht::new(SphericalGrid::new(4).unwrap());
        assert!(matches!(
            sht.inverse(&HarmonicCoeffs::zeros(5)),
            Err(Error::Bandwidth { required: 5, available: 4 })
        ));
    }
}
