//! Discrete probability measures on the torus and the sphere.
//!
//! A [`DiscreteMeasure`] is a weighted point cloud whose weights sum to one.
//! Grid constructors discretize smooth densities `e^{-f} dV`; point clouds
//! can also be read from text files (see [`parse_point_cloud`]).

use std::collections::HashSet;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;
use crate::sphere::SphericalGrid;
use crate::torus::TorusGrid;

/// Largest admissible |f| before `e^{-f}` over- or underflows.
pub const DENSITY_EXPONENT_BOUND: f64 = 700.0;

/// Tolerance (chart coordinates) below which two support points coincide.
pub const DISTINCTNESS_TOLERANCE: f64 = 1e-12;

/// Tolerance on the total mass of a validated measure.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Tolerance on the total mass of weights read from a file.
pub const FILE_MASS_TOLERANCE: f64 = 1e-6;

/// Coordinate chart of a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Chart {
    /// Flat torus `Tⁿ = (ℝ/ℤ)ⁿ`, coordinates in `[0, 1)`.
    Torus(usize),
    /// Unit sphere in ℝ³, longitude φ ∈ [0, 2π) and colatitude θ ∈ [0, π].
    Sphere,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ManifoldPoint {
    Torus(Vec<f64>),
    Sphere { phi: f64, theta: f64 },
}

impl ManifoldPoint {
    /// Torus point; coordinates are reduced modulo 1.
    pub fn torus(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > 3 {
            return Err(Error::InvalidArgument(format!(
                "torus dimension must be 1, 2 or 3, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("torus coordinate".into()));
        }
        Ok(ManifoldPoint::Torus(coords.iter().map(|&c| reduce_unit(c)).collect()))
    }

    /// Sphere point from longitude `phi` and colatitude `theta`.
    ///
    /// `phi` is reduced into `[0, 2π)`; at the poles it is set to 0.
    pub fn sphere(phi: f64, theta: f64) -> Result<Self> {
        if !phi.is_finite() || !theta.is_finite() {
            return Err(Error::NonFinite("sphere angle".into()));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidArgument(format!("colatitude {theta} outside [0, π]")));
        }
        let phi = if theta == 0.0 || theta == PI { 0.0 } else { reduce_angle(phi) };
        Ok(ManifoldPoint::Sphere { phi, theta })
    }

    /// Sphere point from a (nonzero) vector in ℝ³, after normalization.
    pub fn from_unit_vector(v: [f64; 3]) -> Result<Self> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidArgument("zero or non-finite direction".into()));
        }
        let z = (v[2] / norm).clamp(-1.0, 1.0);
        let theta = z.acos();
        let phi = v[1].atan2(v[0]);
        Self::sphere(phi, theta)
    }

    pub fn chart(&self) -> Chart {
        match self {
            ManifoldPoint::Torus(c) => Chart::Torus(c.len()),
            ManifoldPoint::Sphere { .. } => Chart::Sphere,
        }
    }

    /// Chart coordinates: torus coordinates, or `(φ, θ)` on the sphere.
    pub fn coords(&self) -> Vec<f64> {
        match self {
            ManifoldPoint::Torus(c) => c.clone(),
            ManifoldPoint::Sphere { phi, theta } => vec![*phi, *theta],
        }
    }

    /// Embedding of a sphere point as a unit vector; `None` for torus points.
    pub fn to_unit_vector(&self) -> Option<[f64; 3]> {
        match *self {
            ManifoldPoint::Sphere { phi, theta } => {
                let (st, ct) = theta.sin_cos();
                let (sp, cp) = phi.sin_cos();
                Some([st * cp, st * sp, ct])
            }
            ManifoldPoint::Torus(_) => None,
        }
    }

    /// Periodic Euclidean distance on the torus, chordal distance on the sphere.
    pub fn distance(&self, other: &ManifoldPoint) -> Result<f64> {
        match (self, other) {
            (ManifoldPoint::Torus(a), ManifoldPoint::Torus(b)) if a.len() == b.len() => Ok(a
                .iter()
                .zip(b)
                .map(|(x, y)| {
                    let d = periodic_gap(x - y);
                    d * d
                })
                .sum::<f64>()
                .sqrt()),
            (ManifoldPoint::Sphere { .. }, ManifoldPoint::Sphere { .. }) => {
                let a = self.to_unit_vector().expect("sphere point");
                let b = other.to_unit_vector().expect("sphere point");
                Ok(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt())
            }
            _ => Err(Error::InvalidArgument(format!(
                "distance between charts {:?} and {:?}",
                self.chart(),
                other.chart()
            ))),
        }
    }
}

/// |x| reduced to the periodic gap `min(|x| mod 1, 1 - |x| mod 1)`.
pub fn periodic_gap(x: f64) -> f64 {
    let r = x.abs().rem_euclid(1.0);
    r.min(1.0 - r)
}

fn reduce_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

fn reduce_angle(phi: f64) -> f64 {
    let r = phi.rem_euclid(2.0 * PI);
    if r >= 2.0 * PI {
        0.0
    } else {
        r
    }
}

/// Regularity class asserted for a log-density exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Smoothness {
    C2,
    C4,
}

/// Log-density exponent `f` of a measure `e^{-f} dV`.
#[derive(Clone)]
pub struct DensityField {
    eval: Arc<dyn Fn(&ManifoldPoint) -> f64 + Send + Sync>,
    smoothness: Smoothness,
}

impl std::fmt::Debug for DensityField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DensityField").field("smoothness", &self.smoothness).finish()
    }
}

impl DensityField {
    pub fn new(
        smoothness: Smoothness,
        eval: impl Fn(&ManifoldPoint) -> f64 + Send + Sync + 'static,
    ) -> Self {
        DensityField { eval: Arc::new(eval), smoothness }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(Smoothness::C4, move |_| value)
    }

    /// Field given by a function of torus coordinates. Sphere points evaluate to NaN.
    pub fn torus(eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(Smoothness::C4, move |p| match p {
            ManifoldPoint::Torus(x) => eval(x),
            ManifoldPoint::Sphere { .. } => f64::NAN,
        })
    }

    /// Field given by a function of `(φ, θ)`. Torus points evaluate to NaN.
    pub fn sphere(eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(Smoothness::C4, move |p| match *p {
            ManifoldPoint::Sphere { phi, theta } => eval(phi, theta),
            ManifoldPoint::Torus(_) => f64::NAN,
        })
    }

    pub fn eval(&self, p: &ManifoldPoint) -> f64 {
        (self.eval)(p)
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    /// The field `f + c`.
    pub fn shifted(&self, c: f64) -> Self {
        let inner = Arc::clone(&self.eval);
        DensityField { eval: Arc::new(move |p| inner(p) + c), smoothness: self.smoothness }
    }

    /// The field `λ f`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let inner = Arc::clone(&self.eval);
        DensityField { eval: Arc::new(move |p| lambda * inner(p)), smoothness: self.smoothness }
    }
}

/// Weighted point cloud with probability weights.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    points: Vec<ManifoldPoint>,
    weights: Vec<f64>,
    chart: Chart,
}

impl DiscreteMeasure {
    /// Validating constructor: nonnegative weights summing to one, a single
    /// chart, pairwise distinct points.
    pub fn new(points: Vec<ManifoldPoint>, weights: Vec<f64>) -> Result<Self> {
        let measure = Self::with_trusted_support(points, weights)?;
        check_distinct(&measure.points)?;
        Ok(measure)
    }

    /// Like [`DiscreteMeasure::new`] but skips the distinctness check; for
    /// supports that are distinct by construction (grids).
    pub(crate) fn with_trusted_support(points: Vec<ManifoldPoint>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch { expected: points.len(), actual: weights.len() });
        }
        let chart = points[0].chart();
        if let Some(p) = points.iter().find(|p| p.chart() != chart) {
            return Err(Error::InvalidMeasure(format!(
                "mixed charts {:?} and {:?}",
                chart,
                p.chart()
            )));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidMeasure(format!("weight {w} at index {i}")));
        }
        let total = pairwise_sum(&weights);
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteMeasure { points, weights, chart })
    }

    /// Uniform measure on the given points.
    pub fn uniform(points: Vec<ManifoldPoint>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[ManifoldPoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    /// Total mass of the closed ball `B(center, radius)`.
    pub fn ball_mass(&self, center: &ManifoldPoint, radius: f64) -> Result<f64> {
        let mut inside = Vec::new();
        for (p, w) in self.points.iter().zip(&self.weights) {
            if p.distance(center)? <= radius {
                inside.push(*w);
            }
        }
        Ok(pairwise_sum(&inside))
    }
}

fn check_distinct(points: &[ManifoldPoint]) -> Result<()> {
    let coords: Vec<Vec<f64>> = points.iter().map(ManifoldPoint::coords).collect();
    let mut order: Vec<usize> = (0..coords.len()).collect();
    order.sort_by(|&a, &b| coords[a][0].total_cmp(&coords[b][0]));
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if coords[j][0] - coords[i][0] > DISTINCTNESS_TOLERANCE {
                break;
            }
            let same = coords[i]
                .iter()
                .zip(&coords[j])
                .all(|(a, b)| (a - b).abs() <= DISTINCTNESS_TOLERANCE);
            if same {
                return Err(Error::InvalidMeasure(format!(
                    "points {} and {} coincide",
                    i.min(j),
                    i.max(j)
                )));
            }
        }
    }
    Ok(())
}

fn density_weights(f: &DensityField, points: &[ManifoldPoint], base: Option<&[f64]>) -> Result<Vec<f64>> {
    let values: Vec<f64> = points.par_iter().map(|p| f.eval(p)).collect();
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("density exponent at point {i}")));
        }
        if v.abs() > DENSITY_EXPONENT_BOUND {
            return Err(Error::DensityOverflow { index: i, value: v, bound: DENSITY_EXPONENT_BOUND });
        }
    }
    let mut w: Vec<f64> = match base {
        Some(b) => values.iter().zip(b).map(|(v, b)| (-v).exp() * b).collect(),
        None => values.iter().map(|v| (-v).exp()).collect(),
    };
    let total = pairwise_sum(&w);
    for x in &mut w {
        *x /= total;
    }
    Ok(w)
}

/// Discretize `e^{-f} dx` on the grid `Λ_k = (k⁻¹ℤ/ℤ)ⁿ` by normalized point values.
pub fn discretize_torus(f: &DensityField, k: usize, n: usize) -> Result<DiscreteMeasure> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("resolution k = {k} must be at least 2")));
    }
    let grid = TorusGrid::new(n, k)?;
    let points = grid.points();
    let weights = density_weights(f, &points, None)?;
    DiscreteMeasure::with_trusted_support(points, weights)
}

/// Discretize `e^{-f} dA` on an equiangular grid, weighting node values by
/// the grid's quadrature weights.
pub fn discretize_sphere(f: &DensityField, grid: &SphericalGrid) -> Result<DiscreteMeasure> {
    let quad = grid.weights();
    if let Some((i, w)) = quad.iter().enumerate().find(|(_, w)| !(**w > 0.0)) {
        return Err(Error::InvalidGrid(format!("quadrature weight {w} at node {i}")));
    }
    let total = pairwise_sum(&quad);
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidGrid(format!("quadrature weights sum to {total}")));
    }
    let points = grid.points();
    let weights = density_weights(f, &points, Some(&quad))?;
    DiscreteMeasure::with_trusted_support(points, weights)
}

/// Read a point cloud file; see [`parse_point_cloud`] for the format.
pub fn load_point_cloud(path: impl AsRef<Path>, renormalize: bool) -> Result<DiscreteMeasure> {
    let text = std::fs::read_to_string(path)?;
    parse_point_cloud(&text, renormalize)
}

/// Parse a point cloud.
///
/// One record per line, whitespace separated: `chart_tag coord... [weight]`.
/// `#` starts a comment. Chart tags:
///
/// | tag   | coordinates          |
/// |-------|----------------------|
/// | `t1`  | `x1`                 |
/// | `t2`  | `x1 x2`              |
/// | `t3`  | `x1 x2 x3`           |
/// | `sph` | `phi theta` (radians)|
/// | `xyz` | `x y z` (normalized) |
///
/// Either every record carries a weight or none does; missing weights
/// default to `1/N`. Weights must sum to one within 1e-6 unless
/// `renormalize` is set.
pub fn parse_point_cloud(text: &str, renormalize: bool) -> Result<DiscreteMeasure> {
    let mut points = Vec::new();
    let mut weights: Vec<Option<f64>> = Vec::new();
    let mut first_line = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut fields = content.split_whitespace();
        let tag = fields.next().expect("non-empty line");
        let ncoords = match tag {
            "t1" => 1,
            "t2" => 2,
            "t3" => 3,
            "sph" => 2,
            "xyz" => 3,
            other => {
                return Err(Error::Parse { line, message: format!("unknown chart tag `{other}`") })
            }
        };
        let numbers: Vec<f64> = fields
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Parse { line, message: format!("invalid number `{s}`") })
            })
            .collect::<Result<_>>()?;
        if numbers.len() != ncoords && numbers.len() != ncoords + 1 {
            return Err(Error::Parse {
                line,
                message: format!(
                    "tag `{tag}` takes {ncoords} coordinates and an optional weight, got {} fields",
                    numbers.len()
                ),
            });
        }
        let (coords, weight) = numbers.split_at(ncoords);
        let point = match tag {
            "sph" => ManifoldPoint::sphere(coords[0], coords[1]),
            "xyz" => {
                let norm = (coords[0].powi(2) + coords[1].powi(2) + coords[2].powi(2)).sqrt();
                if (norm - 1.0).abs() > 1e-6 {
                    return Err(Error::Parse { line, message: format!("vector norm {norm} is not 1") });
                }
                ManifoldPoint::from_unit_vector([coords[0], coords[1], coords[2]])
            }
            _ => ManifoldPoint::torus(coords),
        }
        .map_err(|e| Error::Parse { line, message: e.to_string() })?;
        if let Some(first) = points.first() {
            if ManifoldPoint::chart(first) != point.chart() {
                return Err(Error::Parse {
                    line,
                    message: format!("chart {:?} differs from line {first_line}", point.chart()),
                });
            }
        } else {
            first_line = line;
        }
        points.push(point);
        weights.push(weight.first().copied());
    }
    if points.is_empty() {
        return Err(Error::Parse { line: 0, message: "no points".into() });
    }
    let with_weight = weights.iter().filter(|w| w.is_some()).count();
    let mut w: Vec<f64> = if with_weight == 0 {
        vec![1.0 / points.len() as f64; points.len()]
    } else if with_weight == points.len() {
        weights.into_iter().map(|w| w.expect("checked")).collect()
    } else {
        let line = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.split('#').next().unwrap_or("").trim().is_empty())
            .nth(weights.iter().position(Option::is_none).expect("mixed"))
            .map_or(0, |(i, _)| i + 1);
        return Err(Error::Parse { line, message: "missing weight (all or no records must carry one)".into() });
    };
    if let Some((i, x)) = w.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidMeasure(format!("weight {x} at record {}", i + 1)));
    }
    let total = pairwise_sum(&w);
    if (total - 1.0).abs() > FILE_MASS_TOLERANCE && !renormalize {
        return Err(Error::InvalidMeasure(format!(
            "weights sum to {total}; pass --renormalize to rescale"
        )));
    }
    if total <= 0.0 {
        return Err(Error::InvalidMeasure("zero total weight".into()));
    }
    for x in &mut w {
        *x /= total;
    }
    DiscreteMeasure::new(points, w)
}

/// Outcome of a density-property scan.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityReport {
    /// `min over centers of k⁻¹ log m(B(x, radius))`; `-inf` if a ball is empty.
    pub min_value: f64,
    /// Index into the center list attaining the minimum.
    pub worst_center: usize,
    /// Set when some ball carries no mass.
    pub violated: bool,
}

/// Scan `k⁻¹ log m(B(x, r))` over the given centers.
///
/// Balls use the periodic distance on the torus and the chordal distance on
/// the sphere. Values close to `0⁻` mean the density property holds at this
/// scale.
pub fn check_density_property(
    measure: &DiscreteMeasure,
    k: f64,
    radius: f64,
    centers: &[ManifoldPoint],
) -> Result<DensityReport> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius {radius} must be positive")));
    }
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("k = {k} must be positive")));
    }
    if centers.is_empty() {
        return Err(Error::InvalidArgument("no sample centers".into()));
    }
    let mut report = DensityReport { min_value: f64::INFINITY, worst_center: 0, violated: false };
    for (idx, c) in centers.iter().enumerate() {
        let mass = measure.ball_mass(c, radius)?;
        let value = if mass > 0.0 { mass.min(1.0).ln() / k } else { f64::NEG_INFINITY };
        if value < report.min_value {
            report.min_value = value;
            report.worst_center = idx;
        }
    }
    report.violated = report.min_value == f64::NEG_INFINITY;
    Ok(report)
}

/// Distinct charts present in a list of points.
pub fn charts(points: &[ManifoldPoint]) -> HashSet<Chart> {
    points.iter().map(ManifoldPoint::chart).collect()
}
