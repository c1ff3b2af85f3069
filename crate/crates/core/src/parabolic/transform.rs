use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::ManifoldPoint;
use crate::torus::{torus_cost, TorusGrid};

/// Exact discrete c-transform `u^c(y) = max_x (-c(x, y) - u(x))`.
pub fn c_transform(
    u: &[f64],
    xs: &[ManifoldPoint],
    ys: &[ManifoldPoint],
    cost: impl Fn(&ManifoldPoint, &ManifoldPoint) -> f64 + Sync,
) -> Result<Vec<f64>> {
    if u.len() != xs.len() {
        return Err(Error::LengthMismatch { expected: xs.len(), actual: u.len() });
    }
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    Ok(ys
        .par_iter()
        .map(|y| xs.iter().zip(u).map(|(x, ux)| -cost(x, y) - ux).fold(f64::NEG_INFINITY, f64::max))
        .collect())
}

/// c-transform for the cost `½ d²` between two points sets of the same torus grid.
pub fn torus_c_transform(u: &[f64], grid: TorusGrid) -> Result<Vec<f64>> {
    let pts = grid.points();
    c_transform(u, &pts, &pts, |x, y| match (x, y) {
        (ManifoldPoint::Torus(a), ManifoldPoint::Torus(b)) => torus_cost(a, b),
        _ => f64::NAN,
    })
}
