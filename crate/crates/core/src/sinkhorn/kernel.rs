use rayon::prelude::*;

use super::Potential;
use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, ManifoldPoint};

/// Smallest admissible `min(a) / max(a)` for a linear-domain kernel
/// application; below it the accelerated softmin reports a backend failure
/// and [`softmin_update`] falls back to the exact log-domain evaluation.
pub const ACCELERATED_DYNAMIC_RANGE: f64 = 1e-6;

/// Which softmin is evaluated: `X → Y` maps `u` to `v[u]`, `Y → X` maps `v` to `u[v]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    XToY,
    YToX,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelMode {
    /// Log-sum-exp over explicit cost rows.
    ExactLog,
    /// Linear-domain kernel application (FFT, SHT or a dense matrix).
    Accelerated,
}

/// Access to the Gibbs kernel `K = e^{-kc}` between a source measure μ (on X)
/// and a target measure ν (on Y).
///
/// Implementations must be safe for concurrent read-only use.
pub trait KernelApplicator: Send + Sync {
    fn k(&self) -> f64;

    /// The measure μ on X.
    fn source(&self) -> &DiscreteMeasure;

    /// The measure ν on Y.
    fn target(&self) -> &DiscreteMeasure;

    /// Cost `c(x_i, y_j)`.
    fn cost(&self, i: usize, j: usize) -> f64;

    fn mode(&self) -> KernelMode;

    /// Costs from every input point of `direction` to output point `t`:
    /// `out[s] = c(x_s, y_t)` for `X → Y` and `out[s] = c(x_t, y_s)` for `Y → X`.
    fn cost_row(&self, direction: Direction, t: usize, out: &mut [f64]) {
        match direction {
            Direction::XToY => out.iter_mut().enumerate().for_each(|(s, c)| *c = self.cost(s, t)),
            Direction::YToX => out.iter_mut().enumerate().for_each(|(s, c)| *c = self.cost(t, s)),
        }
    }

    /// Linear kernel application: `a_j = Σᵢ K_ij bᵢ` for `X → Y`,
    /// `a_i = Σⱼ K_ij bⱼ` for `Y → X`.
    fn apply_kernel(&self, direction: Direction, b: &[f64]) -> Result<Vec<f64>>;

    /// Agreement expected between the exact and accelerated softmin outputs.
    fn tolerance(&self) -> f64 {
        1e-10
    }

    /// Measures feeding and receiving a softmin in `direction`.
    fn endpoints(&self, direction: Direction) -> (&DiscreteMeasure, &DiscreteMeasure) {
        match direction {
            Direction::XToY => (self.source(), self.target()),
            Direction::YToX => (self.target(), self.source()),
        }
    }
}

fn check_input(pot: &Potential, direction: Direction, kern: &dyn KernelApplicator) -> Result<()> {
    let (input, _) = kern.endpoints(direction);
    if pot.len() != input.len() {
        return Err(Error::LengthMismatch { expected: input.len(), actual: pot.len() });
    }
    if let Some(i) = pot.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("softmin input at index {i}")));
    }
    Ok(())
}

fn finish(values: Vec<f64>, k: f64) -> Result<Potential> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("softmin output at index {i}")));
    }
    Potential::new(values, k)
}

/// Softmin in the kernel's configured mode, falling back to the exact
/// log-domain evaluation whenever the accelerated path reports a backend failure.
pub fn softmin_update(
    pot: &Potential,
    direction: Direction,
    kern: &dyn KernelApplicator,
) -> Result<Potential> {
    match kern.mode() {
        KernelMode::ExactLog => softmin_exact(pot, direction, kern),
        KernelMode::Accelerated => match softmin_accelerated(pot, direction, kern) {
            Err(Error::BackendFailure(_)) => softmin_exact(pot, direction, kern),
            other => other,
        },
    }
}

/// Log-sum-exp softmin over explicit cost rows. Each output is reduced
/// sequentially, so results do not depend on the thread layout.
pub fn softmin_exact(
    pot: &Potential,
    direction: Direction,
    kern: &dyn KernelApplicator,
) -> Result<Potential> {
    check_input(pot, direction, kern)?;
    let k = kern.k();
    let (input, output) = kern.endpoints(direction);
    let u = pot.values();
    let log_p: Vec<f64> = input.weights().iter().map(|p| p.ln()).collect();
    let values: Vec<f64> = (0..output.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; input.len()],
            |row, t| {
                kern.cost_row(direction, t, row);
                let mut max = f64::NEG_INFINITY;
                for ((c, &us), &lp) in row.iter_mut().zip(u).zip(&log_p) {
                    *c = -k * (*c + us) + lp;
                    max = max.max(*c);
                }
                if max == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                let sum: f64 = row.iter().map(|&e| (e - max).exp()).sum();
                (max + sum.ln()) / k
            },
        )
        .collect();
    finish(values, k)
}

/// Linear-domain softmin: `v = k⁻¹ log K(e^{-k(u - min u)} p) - min u`.
///
/// Returns [`Error::BackendFailure`] if the kernel application produces a
/// nonpositive or non-finite entry, or if its dynamic range falls below
/// [`ACCELERATED_DYNAMIC_RANGE`].
pub fn softmin_accelerated(
    pot: &Potential,
    direction: Direction,
    kern: &dyn KernelApplicator,
) -> Result<Potential> {
    check_input(pot, direction, kern)?;
    let k = kern.k();
    let (input, _) = kern.endpoints(direction);
    let shift = pot.min();
    let b: Vec<f64> = pot
        .values()
        .iter()
        .zip(input.weights())
        .map(|(u, p)| (-k * (u - shift)).exp() * p)
        .collect();
    let a = kern.apply_kernel(direction, &b)?;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (i, &x) in a.iter().enumerate() {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::BackendFailure(format!("kernel output {x} at index {i}")));
        }
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if lo < ACCELERATED_DYNAMIC_RANGE * hi {
        return Err(Error::BackendFailure(format!("kernel output dynamic range {:e}", lo / hi)));
    }
    finish(a.iter().map(|x| x.ln() / k - shift).collect(), k)
}

/// Kernel with an explicitly stored cost matrix.
#[derive(Clone, Debug)]
pub struct DenseKernel {
    source: DiscreteMeasure,
    target: DiscreteMeasure,
    k: f64,
    costs: Vec<f64>,
    gibbs: Vec<f64>,
    mode: KernelMode,
}

impl DenseKernel {
    /// Row-major costs, `costs[i * target.len() + j] = c(x_i, y_j)`.
    pub fn from_costs(
        source: DiscreteMeasure,
        target: DiscreteMeasure,
        k: f64,
        costs: Vec<f64>,
        mode: KernelMode,
    ) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidArgument(format!("k = {k} must be positive")));
        }
        let expected = source.len() * target.len();
        if costs.len() != expected {
            return Err(Error::LengthMismatch { expected, actual: costs.len() });
        }
        if let Some(i) = costs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("cost entry {i}")));
        }
        let gibbs = costs.iter().map(|c| (-k * c).exp()).collect();
        Ok(DenseKernel { source, target, k, costs, gibbs, mode })
    }

    /// Costs evaluated from a function of the two support points.
    pub fn from_cost_fn(
        source: DiscreteMeasure,
        target: DiscreteMeasure,
        k: f64,
        mode: KernelMode,
        cost: impl Fn(&ManifoldPoint, &ManifoldPoint) -> f64 + Sync,
    ) -> Result<Self> {
        let m = target.len();
        let costs: Vec<f64> = (0..source.len() * m)
            .into_par_iter()
            .map(|ij| cost(&source.points()[ij / m], &target.points()[ij % m]))
            .collect();
        Self::from_costs(source, target, k, costs, mode)
    }

    /// Kernel with prescribed Gibbs matrix entries, `c = -k⁻¹ log K`.
    pub fn from_gibbs(
        source: DiscreteMeasure,
        target: DiscreteMeasure,
        k: f64,
        gibbs: &[f64],
        mode: KernelMode,
    ) -> Result<Self> {
        if let Some((i, &x)) = gibbs.iter().enumerate().find(|(_, x)| !(**x > 0.0)) {
            return Err(Error::NonPositive { index: i, value: x });
        }
        let costs = gibbs.iter().map(|x| -x.ln() / k).collect();
        Self::from_costs(source, target, k, costs, mode)
    }

    pub fn with_mode(mut self, mode: KernelMode) -> Self {
        self.mode = mode;
        self
    }

    /// Gibbs matrix entry `K_ij = e^{-k c_ij}`.
    pub fn gibbs(&self, i: usize, j: usize) -> f64 {
        self.gibbs[i * self.target.len() + j]
    }
}

impl KernelApplicator for DenseKernel {
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
        self.costs[i * self.target.len() + j]
    }

    fn mode(&self) -> KernelMode {
        self.mode
    }

    fn cost_row(&self, direction: Direction, t: usize, out: &mut [f64]) {
        let m = self.target.len();
        match direction {
            Direction::XToY => out.iter_mut().enumerate().for_each(|(s, c)| *c = self.costs[s * m + t]),
            Direction::YToX => out.copy_from_slice(&self.costs[t * m..(t + 1) * m]),
        }
    }

    fn apply_kernel(&self, direction: Direction, b: &[f64]) -> Result<Vec<f64>> {
        let (n, m) = (self.source.len(), self.target.len());
        let out = match direction {
            Direction::XToY => {
                if b.len() != n {
                    return Err(Error::LengthMismatch { expected: n, actual: b.len() });
                }
                (0..m)
                    .into_par_iter()
                    .map(|j| (0..n).map(|i| self.gibbs[i * m + j] * b[i]).sum())
                    .collect()
            }
            Direction::YToX => {
                if b.len() != m {
                    return Err(Error::LengthMismatch { expected: m, actual: b.len() });
                }
                (0..n)
                    .into_par_iter()
                    .map(|i| self.gibbs[i * m..(i + 1) * m].iter().zip(b).map(|(g, x)| g * x).sum())
                    .collect()
            }
        };
        Ok(out)
    }
}
