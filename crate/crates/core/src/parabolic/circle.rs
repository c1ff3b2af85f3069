use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{periodic_gap, Chart, DiscreteMeasure};

const TIE_TOLERANCE: f64 = 1e-14;
const BRUTE_FORCE_LIMIT: usize = 50_000;

/// Optimal quadratic transport between two discrete measures on the circle.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleTransport {
    /// Minimal cost `Σ γᵢⱼ ½ d(xᵢ, yⱼ)²`.
    pub cost: f64,
    /// Shift of the optimal lifted quantile coupling.
    pub theta: f64,
    /// Support of the optimal plan as `(source index, target index, mass)`.
    pub pairing: Vec<(usize, usize, f64)>,
}

struct Quantile {
    /// Support points in increasing order, reduced to `[0, 1)`.
    x: Vec<f64>,
    /// Original indices of the sorted points.
    order: Vec<usize>,
    /// Cumulative masses `P_0 = 0 ≤ … ≤ P_n = 1`.
    cum: Vec<f64>,
}

impl Quantile {
    fn new(x: &[f64], w: &[f64]) -> Result<Self> {
        if x.len() != w.len() {
            return Err(Error::LengthMismatch { expected: x.len(), actual: w.len() });
        }
        if x.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        if let Some(i) = w.iter().position(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(Error::InvalidMeasure(format!("weight {i} is {}", w[i])));
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidMeasure(format!("total mass {total} is not 1")));
        }
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| x[a].rem_euclid(1.0).total_cmp(&x[b].rem_euclid(1.0)));
        let mut cum = Vec::with_capacity(x.len() + 1);
        let mut acc = 0.0;
        cum.push(0.0);
        for &i in &order {
            acc += w[i] / total;
            cum.push(acc);
        }
        *cum.last_mut().unwrap() = 1.0;
        Ok(Quantile { x: order.iter().map(|&i| x[i].rem_euclid(1.0)).collect(), order, cum })
    }

    fn len(&self) -> usize {
        self.x.len()
    }

    /// Index `b` with `cum[b] ≤ t < cum[b + 1]` for `t ∈ [0, 1)`.
    fn locate(&self, t: f64) -> usize {
        let b = self.cum.partition_point(|&c| c <= t);
        b.saturating_sub(1).min(self.len() - 1)
    }
}

/// Walk the coupling `s ↦ (X(s), Y(s + θ))`, calling `visit(a, b, wrap, mass)`
/// for each segment.
fn walk(px: &Quantile, qy: &Quantile, theta: f64, mut visit: impl FnMut(usize, usize, f64, f64)) {
    let mut wrap = theta.floor();
    let mut b = qy.locate(theta - wrap);
    let mut a = 0;
    let mut s = 0.0;
    let n = px.len();
    let m = qy.len();
    while a < n {
        let x_end = px.cum[a + 1];
        let y_end = qy.cum[b + 1] + wrap - theta;
        let end = x_end.min(y_end);
        if end > s {
            visit(a, b, wrap, end - s);
            s = end;
        }
        if x_end <= y_end {
            a += 1;
        }
        if y_end <= x_end {
            b += 1;
            if b == m {
                b = 0;
                wrap += 1.0;
            }
        }
    }
}

fn lifted_cost(px: &Quantile, qy: &Quantile, theta: f64) -> f64 {
    let mut total = 0.0;
    walk(px, qy, theta, |a, b, wrap, mass| {
        let d = px.x[a] - qy.x[b] - wrap;
        total += 0.5 * d * d * mass;
    });
    total
}

/// Exact optimal transport for `½ d²` on the circle between `Σ pᵢ δ_{xᵢ}` and
/// `Σ qⱼ δ_{yⱼ}`. The coupling is the quantile coupling shifted by the
/// minimizing `θ`; ties are broken toward the smallest `θ`.
pub fn circle_transport(x: &[f64], p: &[f64], y: &[f64], q: &[f64]) -> Result<CircleTransport> {
    let px = Quantile::new(x, p)?;
    let qy = Quantile::new(y, q)?;
    let mut candidates: Vec<f64> = Vec::with_capacity(5 * px.len() * qy.len());
    for &pa in &px.cum[..px.len()] {
        for &qb in &qy.cum[..qy.len()] {
            for m in -2..=2 {
                let t = qb - pa + m as f64;
                if (-2.0..=2.0).contains(&t) {
                    candidates.push(t);
                }
            }
        }
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let costs: Vec<f64> = if candidates.len() <= BRUTE_FORCE_LIMIT {
        candidates.par_iter().map(|&t| lifted_cost(&px, &qy, t)).collect()
    } else {
        convex_window(&candidates, |t| lifted_cost(&px, &qy, t))
    };
    let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let idx = costs.iter().position(|&c| c <= best + TIE_TOLERANCE).expect("nonempty candidates");
    let theta = candidates[idx];
    let mut pairing: Vec<(usize, usize, f64)> = Vec::new();
    walk(&px, &qy, theta, |a, b, _, mass| {
        let (i, j) = (px.order[a], qy.order[b]);
        match pairing.last_mut() {
            Some(last) if last.0 == i && last.1 == j => last.2 += mass,
            _ => pairing.push((i, j, mass)),
        }
    });
    Ok(CircleTransport { cost: costs[idx], theta, pairing })
}

/// Costs of a convex sequence, evaluated only near the minimum (others are `+∞`).
fn convex_window(candidates: &[f64], cost: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    while hi - lo > 8 {
        let m1 = lo + (hi - lo) / 3;
        let m2 = hi - (hi - lo) / 3;
        if cost(candidates[m1]) <= cost(candidates[m2]) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let lo = lo.saturating_sub(4);
    let hi = (hi + 4).min(candidates.len() - 1);
    let mut out = vec![f64::INFINITY; candidates.len()];
    for i in lo..=hi {
        out[i] = cost(candidates[i]);
    }
    out
}

fn circle_coordinates(measure: &DiscreteMeasure) -> Result<Vec<f64>> {
    if measure.chart() != Chart::Torus(1) {
        return Err(Error::InvalidMeasure("circle transport needs measures on the 1-torus".into()));
    }
    Ok(measure.points().iter().map(|p| p.coords()[0]).collect())
}

/// [`circle_transport`] for measures on the 1-torus.
pub fn circle_ot_oracle(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<CircleTransport> {
    circle_transport(&circle_coordinates(mu)?, mu.weights(), &circle_coordinates(nu)?, nu.weights())
}

/// `Σ mass · ½ d(xᵢ, yⱼ)²` for a plan given by its support.
pub fn circle_plan_cost(x: &[f64], y: &[f64], pairing: &[(usize, usize, f64)]) -> f64 {
    pairing
        .iter()
        .map(|&(i, j, mass)| {
            let d = periodic_gap(x[i] - y[j]);
            0.5 * d * d * mass
        })
        .sum()
}
