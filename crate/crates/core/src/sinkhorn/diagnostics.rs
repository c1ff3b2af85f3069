use rayon::prelude::*;

use super::kernel::{softmin_update, Direction, KernelApplicator};
use super::{Potential, SinkhornState};
use crate::error::{Error, Result};
use crate::numeric::{pairwise_dot, pairwise_sum};

/// Marginal error above which [`entropic_cost`] flags its result.
const COST_WARNING_THRESHOLD: f64 = 1e-6;

/// Step budget `⌈A k log k⌉` (natural logarithm), at least 1.
pub fn m_max(k: f64, a: f64) -> Result<usize> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidArgument(format!("schedule constant A = {a} must be positive")));
    }
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidArgument(format!("k = {k} must be positive")));
    }
    Ok((a * k * k.ln()).ceil().max(1.0) as usize)
}

/// `ρ_{ku} = e^{k(u[v[u]] - u)}`, the density of the first marginal of the
/// plan induced by `u`, relative to μ.
pub fn rho_density(u: &Potential, kern: &dyn KernelApplicator) -> Result<Vec<f64>> {
    let v = softmin_update(u, Direction::XToY, kern)?;
    let uu = softmin_update(&v, Direction::YToX, kern)?;
    let k = kern.k();
    let rho: Vec<f64> = uu.values().iter().zip(u.values()).map(|(a, b)| (k * (a - b)).exp()).collect();
    if let Some(i) = rho.iter().position(|r| !r.is_finite()) {
        return Err(Error::NonFinite(format!("density at index {i}")));
    }
    Ok(rho)
}

/// Energy functionals at a potential `u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyRecord {
    /// `F = I_μ - L_ν`.
    pub f: f64,
    pub i_mu: f64,
    /// `L_ν = -Σ qⱼ v[u]ⱼ`.
    pub l_nu: f64,
    /// Kantorovich functional `Σ pᵢ uᵢ + Σ qⱼ u^c(yⱼ)` with the exact c-transform.
    pub j: f64,
}

pub fn energy_diagnostics(u: &Potential, kern: &dyn KernelApplicator) -> Result<EnergyRecord> {
    let v = softmin_update(u, Direction::XToY, kern)?;
    let i_mu = pairwise_dot(kern.source().weights(), u.values());
    let l_nu = -pairwise_dot(kern.target().weights(), v.values());
    let uc = discrete_c_transform(u.values(), Direction::XToY, kern)?;
    let j = i_mu + pairwise_dot(kern.target().weights(), &uc);
    Ok(EnergyRecord { f: i_mu - l_nu, i_mu, l_nu, j })
}

/// Exact c-transform over the kernel's supports:
/// `u^c(y) = max_x (-c(x, y) - u(x))` for `X → Y`, and symmetrically.
pub fn discrete_c_transform(
    values: &[f64],
    direction: Direction,
    kern: &dyn KernelApplicator,
) -> Result<Vec<f64>> {
    let (input, output) = kern.endpoints(direction);
    if values.len() != input.len() {
        return Err(Error::LengthMismatch { expected: input.len(), actual: values.len() });
    }
    Ok((0..output.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; input.len()],
            |row, t| {
                kern.cost_row(direction, t, row);
                row.iter().zip(values).map(|(c, u)| -c - u).fold(f64::NEG_INFINITY, f64::max)
            },
        )
        .collect())
}

/// Row and column L¹ marginal errors of the plan `e^{-k(c + u + v)} p ⊗ q`
/// for the state's `(u, v)`, recomputed from fresh kernel applications.
pub fn marginal_errors(state: &SinkhornState, kern: &dyn KernelApplicator) -> Result<(f64, f64)> {
    let k = kern.k();
    let u_of_v = softmin_update(state.v(), Direction::YToX, kern)?;
    let v_of_u = softmin_update(state.u(), Direction::XToY, kern)?;
    let l1 = |fresh: &Potential, held: &Potential, w: &[f64]| {
        let terms: Vec<f64> = fresh
            .values()
            .iter()
            .zip(held.values())
            .zip(w)
            .map(|((a, b), w)| w * (k * (a - b)).exp_m1().abs())
            .collect();
        pairwise_sum(&terms)
    };
    Ok((
        l1(&u_of_v, state.u(), kern.source().weights()),
        l1(&v_of_u, state.v(), kern.target().weights()),
    ))
}

/// Plan entry `γ_ij = e^{-k(c(xᵢ, yⱼ) + uᵢ + vⱼ)} pᵢ qⱼ`.
pub fn plan_entry(state: &SinkhornState, kern: &dyn KernelApplicator, i: usize, j: usize) -> Result<f64> {
    let (n, m) = (kern.source().len(), kern.target().len());
    if i >= n || j >= m {
        return Err(Error::InvalidArgument(format!("plan index ({i}, {j}) outside {n}×{m}")));
    }
    let exponent = -kern.k() * (kern.cost(i, j) + state.u().values()[i] + state.v().values()[j]);
    Ok(exponent.exp() * kern.source().weights()[i] * kern.target().weights()[j])
}

/// Entropic transport cost at a (near) fixed point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropicCost {
    pub value: f64,
    /// Set when the marginal error exceeds 1e-6, i.e. the state is not
    /// close enough to a fixed point for the closed form to apply.
    pub warning: bool,
}

/// `-(Σ pᵢ uᵢ + Σ qⱼ vⱼ)`, the value of `k⁻¹ I(γ | γ_{kc})` at a fixed point.
pub fn entropic_cost(state: &SinkhornState, kern: &dyn KernelApplicator) -> Result<EntropicCost> {
    let (e_row, e_col) = marginal_errors(state, kern)?;
    let value = -(pairwise_dot(kern.source().weights(), state.u().values())
        + pairwise_dot(kern.target().weights(), state.v().values()));
    Ok(EntropicCost { value, warning: e_row.max(e_col) > COST_WARNING_THRESHOLD })
}

/// Oscillation distance `sup(u1 - u2) - inf(u1 - u2)`.
pub fn hilbert_distance(u1: &Potential, u2: &Potential) -> Result<f64> {
    if u1.len() != u2.len() {
        return Err(Error::SupportMismatch { left: u1.len(), right: u2.len() });
    }
    let (lo, hi) = u1
        .values()
        .iter()
        .zip(u2.values())
        .map(|(a, b)| a - b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
    Ok(hi - lo)
}
