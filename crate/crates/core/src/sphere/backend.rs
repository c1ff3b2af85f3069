use std::sync::Arc;

use rayon::prelude::*;

use super::kernels::{antenna_multipliers, heat_multipliers, radial_kernel_value, radial_matrix_apply};
use super::Sht;
use crate::error::{Error, Result};
use crate::measures::{Chart, DiscreteMeasure};
use crate::sinkhorn::{Direction, KernelApplicator, KernelMode};

/// Dense cost matrices are cached up to this many entries.
const DENSE_CACHE_LIMIT: usize = 1 << 22;

/// Kernel families on the sphere, all functions of `s = x·y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SphereKernelSpec {
    /// Band-limited heat kernel `Σ_{l ≤ W} e^{-t l(l+1)} Σ_m Y_l^m(x) conj(Y_l^m(y))`.
    /// Entries that round to a nonpositive value are treated as zero.
    Heat { t: f64 },
    /// Antenna kernel `|x - y|^{2k} = 2^k (1 - x·y)^k`, i.e. cost `-log |x - y|²`.
    /// Requires an integer `k`.
    Antenna,
    /// Gaussian kernel of the geodesic cost `½ d(x, y)²`; dense application only.
    Geodesic,
}

impl SphereKernelSpec {
    /// Heat kernel at the default time `t = 2/k`.
    pub fn heat_default(k: f64) -> Self {
        SphereKernelSpec::Heat { t: 2.0 / k }
    }
}

/// Sinkhorn kernel between measures on the sphere.
#[derive(Clone, Debug)]
pub struct SphereKernel {
    source: DiscreteMeasure,
    target: DiscreteMeasure,
    k: f64,
    spec: SphereKernelSpec,
    mode: KernelMode,
    xs: Vec<[f64; 3]>,
    ys: Vec<[f64; 3]>,
    multipliers: Vec<f64>,
    sht: Option<Arc<Sht>>,
    dense_costs: Option<Vec<f64>>,
}

fn unit_vectors(m: &DiscreteMeasure) -> Result<Vec<[f64; 3]>> {
    if m.chart() != Chart::Sphere {
        return Err(Error::InvalidMeasure(format!("{:?} measure given to a sphere kernel", m.chart())));
    }
    Ok(m.points().iter().map(|p| p.to_unit_vector().expect("sphere point")).collect())
}

impl SphereKernel {
    /// Kernel between two measures carried by the grid of `sht`. Heat and
    /// antenna kernels are applied through the transform; the heat kernel is
    /// band-limited to the grid bandwidth.
    pub fn on_grid(
        sht: Arc<Sht>,
        source: DiscreteMeasure,
        target: DiscreteMeasure,
        spec: SphereKernelSpec,
        k: f64,
        mode: KernelMode,
    ) -> Result<Self> {
        let grid = sht.grid();
        if !grid.carries(&source) || !grid.carries(&target) {
            return Err(Error::InvalidGrid("measures are not supported on the transform grid".into()));
        }
        let bandwidth = grid.bandwidth();
        let mut kern = Self::build(source, target, spec, k, bandwidth, mode)?;
        if !matches!(spec, SphereKernelSpec::Geodesic) {
            kern.sht = Some(sht);
        }
        Ok(kern)
    }

    /// Kernel between arbitrary point clouds, applied densely. `bandwidth`
    /// sets the band limit of the heat kernel and is ignored otherwise.
    pub fn on_points(
        source: DiscreteMeasure,
        target: DiscreteMeasure,
        spec: SphereKernelSpec,
        k: f64,
        bandwidth: usize,
        mode: KernelMode,
    ) -> Result<Self> {
        Self::build(source, target, spec, k, bandwidth, mode)
    }

    fn build(
        source: DiscreteMeasure,
        target: DiscreteMeasure,
        spec: SphereKernelSpec,
        k: f64,
        bandwidth: usize,
        mode: KernelMode,
    ) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidArgument(format!("k = {k} must be positive")));
        }
        let multipliers = match spec {
            SphereKernelSpec::Heat { t } => heat_multipliers(t, bandwidth)?,
            SphereKernelSpec::Antenna => {
                if k.fract() != 0.0 {
                    return Err(Error::InvalidArgument(format!("antenna kernel needs an integer k, got {k}")));
                }
                antenna_multipliers(k as usize, bandwidth.max(k as usize))?
            }
            SphereKernelSpec::Geodesic => Vec::new(),
        };
        let xs = unit_vectors(&source)?;
        let ys = unit_vectors(&target)?;
        let mut kern = SphereKernel {
            source,
            target,
            k,
            spec,
            mode,
            xs,
            ys,
            multipliers,
            sht: None,
            dense_costs: None,
        };
        let (n, m) = (kern.xs.len(), kern.ys.len());
        if n * m <= DENSE_CACHE_LIMIT {
            let costs = (0..n * m).into_par_iter().map(|ij| kern.cost_uncached(ij / m, ij % m)).collect();
            kern.dense_costs = Some(costs);
        }
        Ok(kern)
    }

    pub fn spec(&self) -> SphereKernelSpec {
        self.spec
    }

    pub fn with_mode(mut self, mode: KernelMode) -> Self {
        self.mode = mode;
        self
    }

    /// Kernel value as a function of `s = x·y`.
    pub fn kernel_of_dot(&self, s: f64) -> f64 {
        match self.spec {
            SphereKernelSpec::Heat { .. } => radial_kernel_value(&self.multipliers, s),
            SphereKernelSpec::Antenna => (2.0 * (1.0 - s)).max(0.0).powi(self.k as i32),
            SphereKernelSpec::Geodesic => (-self.k * 0.5 * s.clamp(-1.0, 1.0).acos().powi(2)).exp(),
        }
    }

    fn cost_of_dot(&self, s: f64) -> f64 {
        match self.spec {
            SphereKernelSpec::Geodesic => 0.5 * s.clamp(-1.0, 1.0).acos().powi(2),
            SphereKernelSpec::Antenna => -(2.0 * (1.0 - s)).max(0.0).ln(),
            SphereKernelSpec::Heat { .. } => {
                let kv = self.kernel_of_dot(s);
                if kv > 0.0 {
                    -kv.ln() / self.k
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn cost_uncached(&self, i: usize, j: usize) -> f64 {
        let (x, y) = (self.xs[i], self.ys[j]);
        self.cost_of_dot(x[0] * y[0] + x[1] * y[1] + x[2] * y[2])
    }

    /// Dense matrix product with `K = e^{-kc}`.
    fn apply_dense(&self, direction: Direction, b: &[f64]) -> Vec<f64> {
        let (n_in, n_out) = match direction {
            Direction::XToY => (self.xs.len(), self.ys.len()),
            Direction::YToX => (self.ys.len(), self.xs.len()),
        };
        let k = self.k;
        (0..n_out)
            .into_par_iter()
            .map_init(
                || vec![0.0; n_in],
                |row, t| {
                    self.cost_row(direction, t, row);
                    row.iter().zip(b).map(|(c, bi)| (-k * c).exp() * bi).sum()
                },
            )
            .collect()
    }
}

impl KernelApplicator for SphereKernel {
    fn k(&self) -> f64 {
        self.k
    }

    fn source(&self) -> &DiscreteMeasure {
        &self.source
    }

    fn target(&self) -> &DiscreteMeasure {
        &self.target
    }

    fn cost(&self, i: usize, j: usize) -> f64 {
        match &self.dense_costs {
            Some(c) => c[i * self.ys.len() + j],
            None => self.cost_uncached(i, j),
        }
    }

    fn mode(&self) -> KernelMode {
        self.mode
    }

    fn cost_row(&self, direction: Direction, t: usize, out: &mut [f64]) {
        let m = self.ys.len();
        match (&self.dense_costs, direction) {
            (Some(c), Direction::YToX) => out.copy_from_slice(&c[t * m..(t + 1) * m]),
            (Some(c), Direction::XToY) => out.iter_mut().enumerate().for_each(|(s, o)| *o = c[s * m + t]),
            (None, Direction::YToX) => out.iter_mut().enumerate().for_each(|(s, o)| *o = self.cost_uncached(t, s)),
            (None, Direction::XToY) => out.iter_mut().enumerate().for_each(|(s, o)| *o = self.cost_uncached(s, t)),
        }
    }

    fn apply_kernel(&self, direction: Direction, b: &[f64]) -> Result<Vec<f64>> {
        let expected = match direction {
            Direction::XToY => self.xs.len(),
            Direction::YToX => self.ys.len(),
        };
        if b.len() != expected {
            return Err(Error::LengthMismatch { expected, actual: b.len() });
        }
        match &self.sht {
            Some(sht) => radial_matrix_apply(sht, &self.multipliers, b),
            None => Ok(self.apply_dense(direction, b)),
        }
    }

    fn tolerance(&self) -> f64 {
        1e-8
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{discretize_sphere, DensityField};
    use crate::sinkhorn::{softmin_accelerated, softmin_exact, Potential};
    use crate::sphere::SphericalGrid;

    #[test]
    fn sht_and_dense_applications_agree() {
        let grid = SphericalGrid::new(6).unwrap();
        let sht = Arc::new(Sht::new(grid.clone()));
        let f = DensityField::sphere(|phi, theta| 0.3 * theta.cos() + 0.1 * phi.sin() * theta.sin());
        let mu = discretize_sphere(&f, &grid).unwrap();
        let nu = grid.uniform_measure().unwrap();
        for (spec, k) in [(SphereKernelSpec::heat_default(4.0), 4.0), (SphereKernelSpec::Antenna, 4.0)] {
            let fast = SphereKernel::on_grid(sht.clone(), mu.clone(), nu.clone(), spec, k, KernelMode::Accelerated)
                .unwrap();
            let dense = SphereKernel::on_points(mu.clone(), nu.clone(), spec, k, 6, KernelMode::Accelerated).unwrap();
            let b: Vec<f64> = (0..grid.len()).map(|i| 1.0 + 0.5 * ((i as f64) * 0.37).sin()).collect();
            let a1 = fast.apply_kernel(Direction::XToY, &b).unwrap();
            let a2 = dense.apply_kernel(Direction::XToY, &b).unwrap();
            let scale = a2.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for (x, y) in a1.iter().zip(&a2) {
                assert!((x - y).abs() <= 1e-12 * scale, "{spec:?}: {x} vs {y}");
            }
            let u = Potential::new((0..grid.len()).map(|i| 0.05 * (i as f64 * 0.1).cos()).collect(), k).unwrap();
            let v1 = softmin_accelerated(&u, Direction::XToY, &fast).unwrap();
            let v2 = softmin_exact(&u, Direction::XToY, &fast).unwrap();
            assert!(v1.sup_distance(&v2).unwrap() < 1e-10);
        }
    }

    #[test]
    fn antenna_needs_integer_k() {
        let grid = SphericalGrid::new(4).unwrap();
        let mu = grid.uniform_measure().unwrap();
        assert!(SphereKernel::on_points(mu.clone(), mu, SphereKernelSpec::Antenna, 2.5, 4, KernelMode::ExactLog).is_err());
    }
}
