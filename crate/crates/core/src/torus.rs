//! Periodic grids on the flat torus and the Gaussian / heat-kernel costs on them.
//!
//! Both kernels are translation invariant and separable across axes, so the
//! kernel is stored as a per-axis table and applied either row by row in the
//! log domain or as a periodic convolution through the FFT.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::measures::{periodic_gap, DensityField, DiscreteMeasure, ManifoldPoint};
use crate::sinkhorn::{softmin_exact, Direction, KernelApplicator, KernelMode, Potential};

/// Grid `Λ_k = (k⁻¹ℤ/ℤ)ⁿ` in lexicographic order, first axis most significant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TorusGrid {
    n: usize,
    k: usize,
}

impl TorusGrid {
    /// Largest supported number of grid points.
    pub const MAX_POINTS: usize = 1 << 24;

    pub fn new(n: usize, k: usize) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidArgument(format!("torus dimension {n} not in 1..=3")));
        }
        if k == 0 {
            return Err(Error::InvalidArgument("grid resolution must be positive".into()));
        }
        let points = (k as u128).pow(n as u32);
        if points > Self::MAX_POINTS as u128 {
            return Err(Error::Capacity { points, limit: Self::MAX_POINTS });
        }
        Ok(TorusGrid { n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.k.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.k as f64
    }

    /// Per-axis indices of grid point `i`.
    pub fn multi_index(&self, mut i: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for d in (0..self.n).rev() {
            idx[d] = i % self.k;
            i /= self.k;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().take(self.n).fold(0, |acc, &x| acc * self.k + x % self.k)
    }

    pub fn coords(&self, i: usize) -> Vec<f64> {
        let idx = self.multi_index(i);
        idx[..self.n].iter().map(|&x| x as f64 / self.k as f64).collect()
    }

    pub fn point(&self, i: usize) -> ManifoldPoint {
        ManifoldPoint::Torus(self.coords(i))
    }

    pub fn points(&self) -> Vec<ManifoldPoint> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Uniform probability measure on the grid.
    pub fn uniform_measure(&self) -> Result<DiscreteMeasure> {
        let n = self.len();
        DiscreteMeasure::with_trusted_support(self.points(), vec![1.0 / n as f64; n])
    }

    /// The grid carrying `measure`, if its support is exactly some `Λ_k`.
    pub fn of_measure(measure: &DiscreteMeasure) -> Result<Self> {
        let n = match measure.chart() {
            crate::measures::Chart::Torus(n) => n,
            other => return Err(Error::InvalidGrid(format!("{other:?} measure is not a torus grid"))),
        };
        let k = (measure.len() as f64).powf(1.0 / n as f64).round() as usize;
        let grid = TorusGrid::new(n, k)?;
        if grid.len() != measure.len() {
            return Err(Error::InvalidGrid(format!("{} points is not a perfect {n}-th power", measure.len())));
        }
        for (i, p) in measure.points().iter().enumerate() {
            let c = p.coords();
            if grid.coords(i).iter().zip(&c).any(|(a, b)| (a - b).abs() > 1e-12) {
                return Err(Error::InvalidGrid(format!("point {i} is not the grid node {:?}", grid.coords(i))));
            }
        }
        Ok(grid)
    }
}

/// Half squared periodic distance `½ Σ_d min(|Δ_d|, 1 - |Δ_d|)²`.
pub fn torus_cost(x: &[f64], y: &[f64]) -> f64 {
    0.5 * x.iter().zip(y).map(|(a, b)| periodic_gap(a - b).powi(2)).sum::<f64>()
}

/// Periodized heat kernel `(4πt)^{-n/2} Σ_{|m|∞ ≤ M} e^{-|δ + m|²/(4t)}`.
pub fn torus_heat_kernel(delta: &[f64], t: f64, images: usize) -> f64 {
    delta.iter().map(|&d| heat_kernel_1d(d, t, images)).product()
}

fn heat_kernel_1d(delta: f64, t: f64, images: usize) -> f64 {
    let g = |x: f64| (-x * x / (4.0 * t)).exp();
    // Images paired as j and -j so that the sum is exactly even in delta.
    let sum: f64 = g(delta) + (1..=images).map(|j| g(delta + j as f64) + g(delta - j as f64)).sum::<f64>();
    sum / (4.0 * PI * t).sqrt()
}

/// Translation-invariant kernel on a torus grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TorusKernelSpec {
    /// `K = e^{-k d²/2}`, i.e. cost `½ d²`.
    GaussianCost,
    /// `K = K_t`, the periodized heat kernel, i.e. cost `-k⁻¹ log K_t`.
    HeatKernel { t: f64, images: usize },
}

impl TorusKernelSpec {
    /// Heat kernel at the default time `t = 2/k` with 3 images per side.
    pub fn heat_default(k: f64) -> Self {
        TorusKernelSpec::HeatKernel { t: 2.0 / k, images: 3 }
    }

    fn validate(&self) -> Result<()> {
        if let TorusKernelSpec::HeatKernel { t, images } = *self {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidArgument(format!("heat time {t} must be positive")));
            }
            if images == 0 {
                return Err(Error::InvalidArgument("image cutoff must be at least 1".into()));
            }
        }
        Ok(())
    }

    /// Per-axis cost table `c₁(δ/k)` for `δ = 0..k`, with `k` the grid resolution.
    fn axis_costs(&self, grid: &TorusGrid, k: f64) -> Result<Vec<f64>> {
        self.validate()?;
        let res = grid.k();
        let table: Vec<f64> = (0..res)
            .map(|d| {
                let x = d as f64 / res as f64;
                match *self {
                    TorusKernelSpec::GaussianCost => 0.5 * periodic_gap(x).powi(2),
                    TorusKernelSpec::HeatKernel { t, images } => -heat_kernel_1d(x, t, images).ln() / k,
                }
            })
            .collect();
        if let Some(i) = table.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("kernel underflow at axis offset {i}")));
        }
        Ok(table)
    }
}

/// Periodic convolution with a separable kernel through the n-D FFT.
#[derive(Clone)]
struct Convolution {
    grid: TorusGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Transform of the kernel over the full grid, real because the kernel is even.
    symbol: Vec<f64>,
}

impl std::fmt::Debug for Convolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolution").field("grid", &self.grid).finish()
    }
}

impl Convolution {
    fn new(grid: TorusGrid, axis_kernel: &[f64]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.k());
        let inverse = planner.plan_fft_inverse(grid.k());
        let mut line: Vec<Complex64> = axis_kernel.iter().map(|&h| Complex64::new(h, 0.0)).collect();
        forward.process(&mut line);
        let axis_symbol: Vec<f64> = line.iter().map(|z| z.re).collect();
        let symbol = (0..grid.len())
            .map(|i| {
                let idx = grid.multi_index(i);
                idx[..grid.n()].iter().map(|&x| axis_symbol[x]).product()
            })
            .collect();
        Convolution { grid, forward, inverse, symbol }
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let k = self.grid.k();
        let n = self.grid.n();
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let mut block = Vec::new();
        for d in 0..n {
            let stride = k.pow((n - 1 - d) as u32);
            if stride == 1 {
                fft.process_with_scratch(data, &mut scratch);
                continue;
            }
            let width = k * stride;
            block.resize(width, Complex64::default());
            for chunk in data.chunks_mut(width) {
                // chunk is a k × stride matrix; transpose so each axis line is contiguous.
                for r in 0..k {
                    for c in 0..stride {
                        block[c * k + r] = chunk[r * stride + c];
                    }
                }
                fft.process_with_scratch(&mut block, &mut scratch);
                for r in 0..k {
                    for c in 0..stride {
                        chunk[r * stride + c] = block[c * k + r];
                    }
                }
            }
        }
    }

    fn apply(&self, b: &[f64]) -> Vec<f64> {
        let mut data: Vec<Complex64> = b.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        for (z, s) in data.iter_mut().zip(&self.symbol) {
            *z *= *s;
        }
        self.transform(&mut data, &self.inverse);
        let scale = 1.0 / self.grid.len() as f64;
        data.iter().map(|z| z.re * scale).collect()
    }
}

/// Gibbs kernel of a [`TorusKernelSpec`] on a grid, with exact log-domain
/// and FFT application.
#[derive(Clone, Debug)]
pub struct TorusKernel {
    source: DiscreteMeasure,
    target: DiscreteMeasure,
    grid: TorusGrid,
    spec: TorusKernelSpec,
    k: f64,
    axis_costs: Vec<f64>,
    convolution: Convolution,
    mode: KernelMode,
}

impl TorusKernel {
    /// Kernel between two measures on the same grid `Λ_k`, with regularization
    /// parameter equal to the grid resolution `k`.
    pub fn new(
        source: DiscreteMeasure,
        target: DiscreteMeasure,
        spec: TorusKernelSpec,
        mode: KernelMode,
    ) -> Result<Self> {
        let grid = TorusGrid::of_measure(&source)?;
        if TorusGrid::of_measure(&target)? != grid {
            return Err(Error::InvalidGrid("source and target live on different grids".into()));
        }
        let k = grid.k() as f64;
        let axis_costs = spec.axis_costs(&grid, k)?;
        let axis_kernel: Vec<f64> = axis_costs.iter().map(|c| (-k * c).exp()).collect();
        let convolution = Convolution::new(grid, &axis_kernel);
        Ok(TorusKernel { source, target, grid, spec, k, axis_costs, convolution, mode })
    }

    /// Discretize `e^{-f}` and `e^{-g}` on `Λ_k` and build the kernel between them.
    pub fn from_densities(
        f: &DensityField,
        g: &DensityField,
        k: usize,
        n: usize,
        spec: TorusKernelSpec,
        mode: KernelMode,
    ) -> Result<Self> {
        let mu = crate::measures::discretize_torus(f, k, n)?;
        let nu = crate::measures::discretize_torus(g, k, n)?;
        Self::new(mu, nu, spec, mode)
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn spec(&self) -> TorusKernelSpec {
        self.spec
    }

    pub fn with_mode(mut self, mode: KernelMode) -> Self {
        self.mode = mode;
        self
    }

    /// Periodic convolution `a_i = Σⱼ h(xᵢ - xⱼ) bⱼ` by FFT. Unlike
    /// [`KernelApplicator::apply_kernel`] no positivity check is made.
    pub fn convolve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.grid.len() {
            return Err(Error::LengthMismatch { expected: self.grid.len(), actual: b.len() });
        }
        Ok(self.convolution.apply(b))
    }

    /// Kernel value `h(xᵢ - xⱼ)` between grid nodes.
    pub fn kernel_value(&self, i: usize, j: usize) -> f64 {
        (-self.k * self.cost(i, j)).exp()
    }

    /// Direct O(N²) convolution, for cross-checks.
    pub fn convolve_direct(&self, b: &[f64]) -> Result<Vec<f64>> {
        use rayon::prelude::*;
        if b.len() != self.grid.len() {
            return Err(Error::LengthMismatch { expected: self.grid.len(), actual: b.len() });
        }
        Ok((0..b.len())
            .into_par_iter()
            .map(|i| b.iter().enumerate().map(|(j, bj)| self.kernel_value(i, j) * bj).sum())
            .collect())
    }
}

impl KernelApplicator for TorusKernel {
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
        let (a, b) = (self.grid.multi_index(i), self.grid.multi_index(j));
        let k = self.grid.k();
        (0..self.grid.n()).map(|d| self.axis_costs[(a[d] + k - b[d]) % k]).sum()
    }

    fn mode(&self) -> KernelMode {
        self.mode
    }

    fn cost_row(&self, _direction: Direction, t: usize, out: &mut [f64]) {
        // The cost is symmetric and both measures share the grid.
        let k = self.grid.k();
        let c = &self.axis_costs;
        let ti = self.grid.multi_index(t);
        let off = |s: usize, d: usize| c[(s + k - ti[d]) % k];
        match self.grid.n() {
            1 => out.iter_mut().enumerate().for_each(|(s, o)| *o = off(s, 0)),
            2 => {
                for (a, chunk) in out.chunks_mut(k).enumerate() {
                    let ca = off(a, 0);
                    chunk.iter_mut().enumerate().for_each(|(b, o)| *o = ca + off(b, 1));
                }
            }
            _ => {
                for (a, plane) in out.chunks_mut(k * k).enumerate() {
                    let ca = off(a, 0);
                    for (b, line) in plane.chunks_mut(k).enumerate() {
                        let cb = ca + off(b, 1);
                        line.iter_mut().enumerate().for_each(|(e, o)| *o = cb + off(e, 2));
                    }
                }
            }
        }
    }

    fn apply_kernel(&self, _direction: Direction, b: &[f64]) -> Result<Vec<f64>> {
        let a = self.convolve(b)?;
        if let Some((i, &x)) = a.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::BackendFailure(format!("FFT output {x} at index {i}")));
        }
        Ok(a)
    }
}

/// Exact log-domain softmin `v(y) = k⁻¹ log Σ e^{-k(c + u)} p` on a grid.
pub fn direct_softmin_apply(
    u: &Potential,
    weights: &[f64],
    grid: TorusGrid,
    spec: TorusKernelSpec,
) -> Result<Potential> {
    let mu = DiscreteMeasure::with_trusted_support(grid.points(), weights.to_vec())?;
    let kern = TorusKernel::new(mu, grid.uniform_measure()?, spec, KernelMode::ExactLog)?;
    softmin_exact(u, Direction::XToY, &kern)
}

/// Kernel application `a_i = Σⱼ h(xᵢ - xⱼ) bⱼ` by FFT. Nonpositive or
/// non-finite outputs are reported as a backend failure.
pub fn fft_apply(b: &[f64], grid: TorusGrid, spec: TorusKernelSpec) -> Result<Vec<f64>> {
    let k = grid.k() as f64;
    let axis: Vec<f64> = spec.axis_costs(&grid, k)?.iter().map(|c| (-k * c).exp()).collect();
    if b.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), actual: b.len() });
    }
    let a = Convolution::new(grid, &axis).apply(b);
    if let Some((i, &x)) = a.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::BackendFailure(format!("FFT output {x} at index {i}")));
    }
    Ok(a)
}
