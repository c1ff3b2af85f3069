//! The k-scaled Sinkhorn iteration on potentials.
//!
//! Potentials `u` on the source support and `v` on the target support are
//! updated by the softmin operators
//!
//! ```text
//! v[u](y) = k⁻¹ log Σᵢ exp(-k (c(xᵢ, y) + u(xᵢ))) pᵢ
//! u[v](x) = k⁻¹ log Σⱼ exp(-k (c(x, yⱼ) + v(yⱼ))) qⱼ
//! ```
//!
//! and one Sinkhorn step is `u ↦ u[v[u]]`. In terms of the classical scaling
//! vectors, `a = e^{-ku} p` and `b = e^{-kv} q`.

mod diagnostics;
mod kernel;
mod potential;
mod state;

pub use diagnostics::{
    discrete_c_transform, energy_diagnostics, entropic_cost, hilbert_distance, m_max,
    marginal_errors, plan_entry, rho_density, EnergyRecord, EntropicCost,
};
pub use kernel::{
    softmin_accelerated, softmin_exact, softmin_update, DenseKernel, Direction, KernelApplicator,
    KernelMode, ACCELERATED_DYNAMIC_RANGE,
};
pub use potential::Potential;
pub use state::{sinkhorn_step, SinkhornState, StopReason, TraceRecord, STAGNATION_THRESHOLD, STAGNATION_WINDOW};
