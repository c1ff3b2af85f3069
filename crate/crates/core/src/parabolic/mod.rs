//! Independent reference machinery: exact c-transforms, quasi-convexity
//! checks, an explicit finite-difference solver for the parabolic optimal
//! transport equation
//!
//! ```text
//! ∂ₜu = log det(I + ∇²u) - g(x + ∇u) + f(x)
//! ```
//!
//! on T¹ and T², its static Monge–Ampère residual, an exact transport
//! oracle on the circle, and an exponential-decay fit.

mod circle;
mod fit;
mod pde;
mod transform;

pub use circle::{circle_ot_oracle, circle_plan_cost, circle_transport, CircleTransport};
pub use fit::{exp_convergence_fit, exp_fit_series, ExpFit, FIT_WINDOW};
pub use pde::{
    check_quasiconvex, ma_residual, parabolic_step, periodic_cubic_interpolate, solve_parabolic,
    ParabolicProblem, ParabolicState, QuasiConvexity, DEFAULT_DT_FACTOR,
};
pub use transform::{c_transform, torus_c_transform};
