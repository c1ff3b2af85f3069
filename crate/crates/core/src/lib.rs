//! Entropic optimal transport on the flat torus and the round two-sphere.
//!
//! The crate implements the k-scaled Sinkhorn iteration on potentials,
//!
//! ```text
//! v[u](y) = k⁻¹ log Σᵢ exp(-k (c(xᵢ, y) + u(xᵢ))) pᵢ
//! u[v](x) = k⁻¹ log Σⱼ exp(-k (c(x, yⱼ) + v(yⱼ))) qⱼ
//! u_{m+1} = u[v[u_m]]
//! ```
//!
//! with the regularization ε = 1/k tied to the grid spacing. Kernel
//! applications go through [`sinkhorn::KernelApplicator`], which has an
//! exact log-domain mode and accelerated modes (FFT on the torus,
//! spherical harmonic transforms on the sphere).
//!
//! Independent reference machinery lives alongside: exact c-transforms,
//! an explicit finite-difference solver for the parabolic Monge-Ampère
//! flow `∂ₜu = log det(I + ∇²u) - g(x + ∇u) + f`, an exact circle
//! transport oracle, and discrete stationary-phase diagnostics.

pub mod error;
pub mod measures;
pub mod numeric;
pub mod parabolic;
pub mod sinkhorn;
pub mod sphere;
pub mod stationary_phase;
pub mod torus;

pub use error::{Error, Result};
pub use measures::{Chart, DensityField, DiscreteMeasure, ManifoldPoint, Smoothness};
pub use sinkhorn::{
    Direction, KernelApplicator, KernelMode, Potential, SinkhornState, StopReason, TraceRecord,
};
