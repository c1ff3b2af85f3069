use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, ManifoldPoint};

/// Equiangular latitude-longitude grid of bandwidth `W`.
///
/// There are `2(W+1)` colatitudes `θ_j = (2j+1)π / (4(W+1))` (poles
/// excluded) and `2(W+1)` longitudes `φ_k = 2πk / (2(W+1))`. Node `i` is
/// `(j, k) = (i / n_phi, i % n_phi)`. Latitude weights are Fejér's first
/// rule in `cos θ`, so the weighted node sum is exact for every spherical
/// harmonic of degree at most `2W+1`; node weights sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct SphericalGrid {
    bandwidth: usize,
    thetas: Vec<f64>,
    phis: Vec<f64>,
    ring_weights: Vec<f64>,
}

impl SphericalGrid {
    pub fn new(bandwidth: usize) -> Result<Self> {
        if bandwidth == 0 {
            return Err(Error::InvalidArgument("bandwidth must be positive".into()));
        }
        let n = 2 * (bandwidth + 1);
        let thetas: Vec<f64> = (0..n).map(|j| (2 * j + 1) as f64 * PI / (2 * n) as f64).collect();
        let phis: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
        let ring_weights = thetas
            .iter()
            .map(|&t| {
                let s: f64 = (1..=n / 2)
                    .map(|l| (2.0 * l as f64 * t).cos() / (4.0 * (l * l) as f64 - 1.0))
                    .sum();
                // Fejér weight (sums to 2 over rings), spread evenly over the ring.
                (2.0 / n as f64) * (1.0 - 2.0 * s) / (2.0 * n as f64)
            })
            .collect();
        Ok(SphericalGrid { bandwidth, thetas, phis, ring_weights })
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn n_theta(&self) -> usize {
        self.thetas.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phis.len()
    }

    pub fn len(&self) -> usize {
        self.thetas.len() * self.phis.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    /// Ring and longitude indices of node `i`.
    pub fn node(&self, i: usize) -> (usize, usize) {
        (i / self.n_phi(), i % self.n_phi())
    }

    pub fn index(&self, ring: usize, lon: usize) -> usize {
        ring * self.n_phi() + lon % self.n_phi()
    }

    /// Weight of a single node on ring `j`.
    pub fn ring_weight(&self, ring: usize) -> f64 {
        self.ring_weights[ring]
    }

    /// Node weights (summing to 1), in node order.
    pub fn weights(&self) -> Vec<f64> {
        let np = self.n_phi();
        (0..self.len()).map(|i| self.ring_weights[i / np]).collect()
    }

    /// Node area weights `4π wᵢ`.
    pub fn area_weights(&self) -> Vec<f64> {
        self.weights().into_iter().map(|w| 4.0 * PI * w).collect()
    }

    pub fn point(&self, i: usize) -> ManifoldPoint {
        let (j, k) = self.node(i);
        ManifoldPoint::Sphere { phi: self.phis[k], theta: self.thetas[j] }
    }

    pub fn points(&self) -> Vec<ManifoldPoint> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn unit_vector(&self, i: usize) -> [f64; 3] {
        let (j, k) = self.node(i);
        let (st, ct) = self.thetas[j].sin_cos();
        let (sp, cp) = self.phis[k].sin_cos();
        [st * cp, st * sp, ct]
    }

    pub fn unit_vectors(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.unit_vector(i)).collect()
    }

    /// The quadrature measure itself, i.e. normalized surface measure.
    pub fn uniform_measure(&self) -> Result<DiscreteMeasure> {
        DiscreteMeasure::with_trusted_support(self.points(), self.weights())
    }

    /// Whether `measure` is supported on exactly this grid's nodes, in order.
    pub fn carries(&self, measure: &DiscreteMeasure) -> bool {
        measure.len() == self.len()
            && measure.points().iter().enumerate().all(|(i, p)| match (p, self.point(i)) {
                (
                    ManifoldPoint::Sphere { phi, theta },
                    ManifoldPoint::Sphere { phi: gp, theta: gt },
                ) => (phi - gp).abs() <= 1e-12 && (theta - gt).abs() <= 1e-12,
                _ => false,
            })
    }
}
