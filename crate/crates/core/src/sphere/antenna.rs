use std::f64::consts::PI;

use super::SphericalGrid;
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;

/// Heights `hᵢ = aᵢ^{1/k}` from a positive scaling vector.
pub fn antenna_height(a: &[f64], k: f64) -> Result<Vec<f64>> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidArgument(format!("k = {k} must be positive")));
    }
    a.iter()
        .enumerate()
        .map(|(i, &x)| {
            if x.is_finite() && x > 0.0 {
                Ok(x.powf(1.0 / k))
            } else {
                Err(Error::NonPositive { index: i, value: x })
            }
        })
        .collect()
}

/// Reflected directions of the radial surface `{h(x) x}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReflectorField {
    /// Unit reflected direction per node.
    pub directions: Vec<[f64; 3]>,
    /// Unit outward normal per node.
    pub normals: Vec<[f64; 3]>,
    /// Nodes whose normal could not be formed.
    pub flagged: Vec<usize>,
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Reflect the rays emitted from the origin in each node direction `x` off
/// the surface `h(x) x`: `r = x - 2 (x·n) n` with outward normal
/// `n ∝ h x - ∇h`. The surface gradient uses centered differences, periodic
/// in φ and second-order one-sided at the first and last rings.
pub fn reflector_map(h: &[f64], grid: &SphericalGrid) -> Result<ReflectorField> {
    if h.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), actual: h.len() });
    }
    if let Some((i, &x)) = h.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::NonPositive { index: i, value: x });
    }
    let (nt, np) = (grid.n_theta(), grid.n_phi());
    let dt = PI / nt as f64;
    let dp = 2.0 * PI / np as f64;
    let at = |j: usize, k: usize| h[grid.index(j, k)];
    let mut field = ReflectorField {
        directions: Vec::with_capacity(grid.len()),
        normals: Vec::with_capacity(grid.len()),
        flagged: Vec::new(),
    };
    for i in 0..grid.len() {
        let (j, k) = grid.node(i);
        let h_theta = if j == 0 {
            (-3.0 * at(0, k) + 4.0 * at(1, k) - at(2, k)) / (2.0 * dt)
        } else if j == nt - 1 {
            (3.0 * at(j, k) - 4.0 * at(j - 1, k) + at(j - 2, k)) / (2.0 * dt)
        } else {
            (at(j + 1, k) - at(j - 1, k)) / (2.0 * dt)
        };
        let h_phi = (at(j, (k + 1) % np) - at(j, (k + np - 1) % np)) / (2.0 * dp);
        let (st, ct) = grid.thetas()[j].sin_cos();
        let (sp, cp) = grid.phis()[k].sin_cos();
        let x = [st * cp, st * sp, ct];
        let e_theta = [ct * cp, ct * sp, -st];
        let e_phi = [-sp, cp, 0.0];
        let g_phi = h_phi / st;
        let hi = h[i];
        let raw: [f64; 3] =
            std::array::from_fn(|c| hi * x[c] - h_theta * e_theta[c] - g_phi * e_phi[c]);
        let norm = dot(raw, raw).sqrt();
        if !(norm.is_finite() && norm > 1e-300) || !(h_theta.is_finite() && g_phi.is_finite()) {
            field.flagged.push(i);
            field.normals.push([f64::NAN; 3]);
            field.directions.push([f64::NAN; 3]);
            continue;
        }
        let n = raw.map(|c| c / norm);
        let xn = dot(x, n);
        let r: [f64; 3] = std::array::from_fn(|c| x[c] - 2.0 * xn * n[c]);
        field.normals.push(n);
        field.directions.push(r);
    }
    Ok(field)
}

/// Longitude offset of the bin edges, keeping grid meridians off the edges.
const BIN_PHI_OFFSET: f64 = 0.1;

fn bin_of(v: [f64; 3], bins: usize) -> usize {
    let theta = v[2].clamp(-1.0, 1.0).acos();
    let phi = (v[1].atan2(v[0]) - BIN_PHI_OFFSET).rem_euclid(2.0 * PI);
    let bt = ((theta / PI) * bins as f64).floor().min(bins as f64 - 1.0) as usize;
    let bp = ((phi / (2.0 * PI)) * (2 * bins) as f64).floor().min(2.0 * bins as f64 - 1.0) as usize;
    bt * 2 * bins + bp
}

/// L¹ distance between the reflected source mass and the target measure,
/// both binned on a `bins × 2·bins` latitude-longitude partition. Mass at
/// flagged nodes counts fully as discrepancy.
pub fn pushforward_discrepancy(
    field: &ReflectorField,
    source_weights: &[f64],
    target: &DiscreteMeasure,
    bins: usize,
) -> Result<f64> {
    if bins == 0 {
        return Err(Error::InvalidArgument("at least one bin required".into()));
    }
    if source_weights.len() != field.directions.len() {
        return Err(Error::LengthMismatch { expected: field.directions.len(), actual: source_weights.len() });
    }
    let mut hist = vec![0.0; 2 * bins * bins];
    let mut lost = 0.0;
    for (i, (r, w)) in field.directions.iter().zip(source_weights).enumerate() {
        if field.flagged.binary_search(&i).is_ok() {
            lost += w;
        } else {
            hist[bin_of(*r, bins)] += w;
        }
    }
    for (p, w) in target.points().iter().zip(target.weights()) {
        let v = p
            .to_unit_vector()
            .ok_or_else(|| Error::InvalidMeasure("target measure is not on the sphere".into()))?;
        hist[bin_of(v, bins)] -= w;
    }
    Ok(hist.iter().map(|x| x.abs()).sum::<f64>() + lost)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heights_are_kth_roots() {
        assert_eq!(antenna_height(&[1.0, 1.0], 5.0).unwrap(), vec![1.0, 1.0]);
        let h = antenna_height(&[2f64.powi(6)], 6.0).unwrap();
        assert!((h[0] - 2.0).abs() < 1e-15);
        assert!(matches!(antenna_height(&[1.0, 0.0], 2.0), Err(Error::NonPositive { index: 1, .. })));
    }

    #[test]
    fn constant_height_retroreflects() {
        let grid = SphericalGrid::new(5).unwrap();
        for c in [1.0, 3.7] {
            let field = reflector_map(&vec![c; grid.len()], &grid).unwrap();
            assert!(field.flagged.is_empty());
            for (i, r) in field.directions.iter().enumerate() {
                let x = grid.unit_vector(i);
                for d in 0..3 {
                    assert!((r[d] + x[d]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn reflection_is_unit_and_angle_preserving() {
        let grid = SphericalGrid::new(8).unwrap();
        let h: Vec<f64> = grid.unit_vectors().iter().map(|v| (0.3 * v[0] - 0.2 * v[2]).exp()).collect();
        let field = reflector_map(&h, &grid).unwrap();
        for i in 0..grid.len() {
            let r = field.directions[i];
            let n = field.normals[i];
            let x = grid.unit_vector(i);
            assert!((dot(r, r).sqrt() - 1.0).abs() < 1e-8);
            assert!((dot(x, n).abs() - dot(r, n).abs()).abs() < 1e-8);
        }
    }

    #[test]
    fn antipodal_pushforward_of_symmetric_measure_is_exact() {
        let grid = SphericalGrid::new(5).unwrap();
        let field = reflector_map(&vec![1.0; grid.len()], &grid).unwrap();
        let mu = grid.uniform_measure().unwrap();
        let d = pushforward_discrepancy(&field, mu.weights(), &mu, 4).unwrap();
        assert!(d < 1e-12, "{d}");
    }
}
