//! The round two-sphere: equiangular grids, spherical harmonic transforms,
//! radial kernels applied through the addition theorem, and the reflector
//! antenna map.
//!
//! Spherical harmonics are orthonormal on S² and carry the Condon–Shortley
//! phase: `Y_l^m(θ, φ) = P̄_l^m(cos θ) e^{imφ}` with
//! `P̄_l^m = √((2l+1)/(4π) · (l-m)!/(l+m)!) P_l^m` and
//! `Y_l^{-m} = (-1)^m conj(Y_l^m)`. A radial kernel `K(x·y) = Σ_l c_l P_l(x·y)`
//! then acts diagonally with multiplier `λ_l = 4π c_l / (2l+1)`.

mod antenna;
mod backend;
mod grid;
mod kernels;
mod legendre;
mod sht;

pub use antenna::{antenna_height, pushforward_discrepancy, reflector_map, ReflectorField};
pub use backend::{SphereKernel, SphereKernelSpec};
pub use grid::SphericalGrid;
pub use kernels::{
    antenna_kernel_apply, antenna_legendre_coefficients, antenna_multipliers, bandlimited_heat_apply,
    heat_multipliers, radial_kernel_value, radial_matrix_apply,
};
pub use legendre::{assoc_legendre, normalized_legendre};
pub use sht::{sht_forward, sht_inverse, HarmonicCoeffs, Sht};
