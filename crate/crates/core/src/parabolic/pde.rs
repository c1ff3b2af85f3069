use crate::error::{Error, Result};
use crate::measures::DensityField;
use crate::torus::TorusGrid;

/// Default explicit time step as a multiple of `dx²`.
pub const DEFAULT_DT_FACTOR: f64 = 0.2;

/// Smallest eigenvalue of `I + H` over the grid, with `H` the centered
/// second-difference Hessian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuasiConvexity {
    pub min_eig: f64,
    pub ok: bool,
}

fn check_dimension(grid: TorusGrid) -> Result<()> {
    if grid.n() > 2 {
        return Err(Error::InvalidArgument(format!("dimension {} not supported; use 1 or 2", grid.n())));
    }
    if grid.k() < 4 {
        return Err(Error::InvalidGrid(format!("resolution {} too coarse for the stencils", grid.k())));
    }
    Ok(())
}

/// Per-node derivative data: gradient, Hessian `(u_xx, u_xy, u_yy)`.
#[derive(Clone, Copy, Debug)]
struct Jet {
    grad: [f64; 2],
    hess: [f64; 3],
}

fn jet(u: &[f64], grid: TorusGrid, i: usize) -> Jet {
    let k = grid.k();
    let dx = grid.spacing();
    if grid.n() == 1 {
        let (l, r) = (u[(i + k - 1) % k], u[(i + 1) % k]);
        return Jet {
            grad: [(r - l) / (2.0 * dx), 0.0],
            hess: [(r - 2.0 * u[i] + l) / (dx * dx), 0.0, 0.0],
        };
    }
    let (a, b) = (i / k, i % k);
    let at = |da: usize, db: usize| u[((a + da) % k) * k + (b + db) % k];
    let m = k - 1; // index offset -1 modulo k
    let c = u[i];
    let uxx = (at(1, 0) - 2.0 * c + at(m, 0)) / (dx * dx);
    let uyy = (at(0, 1) - 2.0 * c + at(0, m)) / (dx * dx);
    let uxy = (at(1, 1) - at(1, m) - at(m, 1) + at(m, m)) / (4.0 * dx * dx);
    Jet {
        grad: [(at(1, 0) - at(m, 0)) / (2.0 * dx), (at(0, 1) - at(0, m)) / (2.0 * dx)],
        hess: [uxx, uxy, uyy],
    }
}

/// Smallest eigenvalue and determinant of `I + H`.
fn eig_det(j: &Jet, n: usize) -> (f64, f64) {
    if n == 1 {
        let v = 1.0 + j.hess[0];
        return (v, v);
    }
    let (a, b, d) = (1.0 + j.hess[0], j.hess[1], 1.0 + j.hess[2]);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - rad, a * d - b * b)
}

pub fn check_quasiconvex(u: &[f64], grid: TorusGrid) -> Result<QuasiConvexity> {
    check_dimension(grid)?;
    if u.len() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), actual: u.len() });
    }
    let min_eig = (0..u.len()).map(|i| eig_det(&jet(u, grid, i), grid.n()).0).fold(f64::INFINITY, f64::min);
    Ok(QuasiConvexity { min_eig, ok: min_eig > 0.0 })
}

fn cubic_weights(s: f64) -> [f64; 4] {
    [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ]
}

/// Periodic cubic Lagrange interpolation of grid samples at `point` (torus coordinates).
pub fn periodic_cubic_interpolate(samples: &[f64], grid: TorusGrid, point: &[f64]) -> f64 {
    let k = grid.k();
    let kf = k as f64;
    let mut base = [0usize; 2];
    let mut w = [[0.0; 4]; 2];
    for d in 0..grid.n() {
        let pos = point[d].rem_euclid(1.0) * kf;
        let i0 = pos.floor();
        w[d] = cubic_weights(pos - i0);
        base[d] = (i0 as usize + k - 1) % k;
    }
    if grid.n() == 1 {
        return (0..4).map(|a| w[0][a] * samples[(base[0] + a) % k]).sum();
    }
    let mut total = 0.0;
    for a in 0..4 {
        let row = ((base[0] + a) % k) * k;
        let inner: f64 = (0..4).map(|b| w[1][b] * samples[row + (base[1] + b) % k]).sum();
        total += w[0][a] * inner;
    }
    total
}

/// Log-densities `f, g` sampled on a grid, each shifted so that `e^{-f}` and
/// `e^{-g}` have grid mean one (probability densities on the torus).
#[derive(Clone, Debug)]
pub struct ParabolicProblem {
    grid: TorusGrid,
    f: Vec<f64>,
    g: Vec<f64>,
}

fn normalize_log_density(mut s: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(i) = s.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("log-density sample {i}")));
    }
    let mean = s.iter().map(|v| (-v).exp()).sum::<f64>() / s.len() as f64;
    let shift = mean.ln();
    for v in &mut s {
        *v += shift;
    }
    Ok(s)
}

impl ParabolicProblem {
    pub fn new(grid: TorusGrid, f: &DensityField, g: &DensityField) -> Result<Self> {
        let pts = grid.points();
        Self::from_samples(grid, pts.iter().map(|p| f.eval(p)).collect(), pts.iter().map(|p| g.eval(p)).collect())
    }

    pub fn from_samples(grid: TorusGrid, f: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        check_dimension(grid)?;
        for s in [&f, &g] {
            if s.len() != grid.len() {
                return Err(Error::LengthMismatch { expected: grid.len(), actual: s.len() });
            }
        }
        Ok(ParabolicProblem { grid, f: normalize_log_density(f)?, g: normalize_log_density(g)? })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    /// Normalized samples of `f`.
    pub fn f(&self) -> &[f64] {
        &self.f
    }

    /// Normalized samples of `g`.
    pub fn g(&self) -> &[f64] {
        &self.g
    }

    /// `0.2 dx²`.
    pub fn default_dt(&self) -> f64 {
        DEFAULT_DT_FACTOR * self.grid.spacing().powi(2)
    }

    /// Right-hand side `log det(I + H) - g(x + ∇u) + f` and the smallest
    /// eigenvalue of `I + H`. `t` is only used for error reports.
    pub fn rhs(&self, u: &[f64], t: f64) -> Result<(Vec<f64>, f64)> {
        if u.len() != self.grid.len() {
            return Err(Error::LengthMismatch { expected: self.grid.len(), actual: u.len() });
        }
        let n = self.grid.n();
        let mut out = Vec::with_capacity(u.len());
        let mut min_eig = f64::INFINITY;
        for i in 0..u.len() {
            let j = jet(u, self.grid, i);
            let (eig, det) = eig_det(&j, n);
            min_eig = min_eig.min(eig);
            if !(eig > 0.0 && det > 0.0) {
                return Err(Error::QuasiConvexityLost { t, min_eig: eig, state: u.to_vec() });
            }
            let k = self.grid.k();
            let dx = self.grid.spacing();
            let x = if n == 1 { [i as f64 * dx, 0.0] } else { [(i / k) as f64 * dx, (i % k) as f64 * dx] };
            let y = [x[0] + j.grad[0], x[1] + j.grad[1]];
            let gy = periodic_cubic_interpolate(&self.g, self.grid, &y[..n]);
            out.push(det.ln() - gy + self.f[i]);
        }
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("right-hand side at node {i}, t = {t}")));
        }
        Ok((out, min_eig))
    }
}

/// Grid samples of `u_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParabolicState {
    pub u: Vec<f64>,
    pub t: f64,
    pub dx: f64,
    /// Nominal time step.
    pub dt: f64,
    /// Smallest eigenvalue of `I + H(u)` at the start of the last step.
    pub min_eig: f64,
    /// `sup |Δu|` over the last step (0 before any step).
    pub sup_change: f64,
}

impl ParabolicState {
    pub fn new(problem: &ParabolicProblem, u0: Vec<f64>, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step {dt} must be positive")));
        }
        let q = check_quasiconvex(&u0, problem.grid())?;
        if !q.ok {
            return Err(Error::QuasiConvexityLost { t: 0.0, min_eig: q.min_eig, state: u0 });
        }
        Ok(ParabolicState { u: u0, t: 0.0, dx: problem.grid().spacing(), dt, min_eig: q.min_eig, sup_change: 0.0 })
    }
}

fn step_by(state: &ParabolicState, problem: &ParabolicProblem, dt: f64) -> Result<ParabolicState> {
    let (rhs, min_eig) = problem.rhs(&state.u, state.t)?;
    let n = problem.grid().n() as f64;
    let bound = min_eig * state.dx * state.dx / (2.0 * n);
    if dt > bound {
        return Err(Error::Unstable { t: state.t, dt, bound, state: state.u.clone() });
    }
    let u: Vec<f64> = state.u.iter().zip(&rhs).map(|(u, r)| u + dt * r).collect();
    let sup_change = rhs.iter().fold(0.0f64, |m, r| m.max((dt * r).abs()));
    Ok(ParabolicState { u, t: state.t + dt, dx: state.dx, dt: state.dt, min_eig, sup_change })
}

/// One explicit Euler step of size `state.dt`.
pub fn parabolic_step(state: &ParabolicState, problem: &ParabolicProblem) -> Result<ParabolicState> {
    step_by(state, problem, state.dt)
}

/// Integrate from `u0` at `t = 0`, returning the states at the requested
/// (nondecreasing) output times. The step before each output time is
/// shortened so that the time is hit exactly.
pub fn solve_parabolic(
    problem: &ParabolicProblem,
    u0: Vec<f64>,
    dt: f64,
    output_times: &[f64],
) -> Result<Vec<ParabolicState>> {
    if output_times.windows(2).any(|w| w[1] < w[0]) || output_times.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::InvalidArgument("output times must be nonnegative and sorted".into()));
    }
    let mut state = ParabolicState::new(problem, u0, dt)?;
    let mut out = Vec::with_capacity(output_times.len());
    for &target in output_times {
        loop {
            let remaining = target - state.t;
            if remaining <= 1e-12 * dt {
                break;
            }
            let h = if remaining < dt * (1.0 + 1e-9) { remaining } else { dt };
            state = step_by(&state, problem, h)?;
        }
        state.t = target;
        out.push(state.clone());
    }
    Ok(out)
}

/// Sup-norm of `log det(I + H(u)) - g(x + ∇u) + f`.
pub fn ma_residual(u: &[f64], problem: &ParabolicProblem) -> Result<f64> {
    let (rhs, _) = problem.rhs(u, f64::NAN)?;
    Ok(rhs.iter().fold(0.0f64, |m, r| m.max(r.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn quasiconvexity_examples() {
        let grid = TorusGrid::new(1, 64).unwrap();
        let q = check_quasiconvex(&[0.0; 64], grid).unwrap();
        assert!(q.ok && (q.min_eig - 1.0).abs() < 1e-15);
        let mild: Vec<f64> = grid.points().iter().map(|p| (2.0 * PI * p.coords()[0]).cos() / (8.0 * PI * PI)).collect();
        let q = check_quasiconvex(&mild, grid).unwrap();
        assert!(q.ok && (q.min_eig - 0.5).abs() < 1e-3);
        let steep: Vec<f64> = grid.points().iter().map(|p| (2.0 * PI * p.coords()[0]).cos()).collect();
        let q = check_quasiconvex(&steep, grid).unwrap();
        assert!(!q.ok && (q.min_eig - (1.0 - 4.0 * PI * PI)).abs() < 0.05);
    }

    #[test]
    fn cubic_interpolation_is_exact_for_cubics_locally() {
        let grid = TorusGrid::new(1, 32).unwrap();
        let samples: Vec<f64> = (0..32).map(|i| (2.0 * PI * i as f64 / 32.0).sin()).collect();
        for x in [0.013, 0.5, 0.77, 0.999] {
            let v = periodic_cubic_interpolate(&samples, grid, &[x]);
            assert!((v - (2.0 * PI * x).sin()).abs() < 1e-4);
        }
        assert_eq!(periodic_cubic_interpolate(&samples, grid, &[3.0 / 32.0]), samples[3]);
    }

    #[test]
    fn equal_densities_are_stationary() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let f = DensityField::torus(|x| 0.2 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin());
        let problem = ParabolicProblem::new(grid, &f, &f).unwrap();
        let states = solve_parabolic(&problem, vec![0.0; 256], problem.default_dt(), &[0.01]).unwrap();
        assert!(states[0].u.iter().all(|&v| v.abs() < 1e-14));
        assert!(ma_residual(&states[0].u, &problem).unwrap() < 1e-14);
    }

    #[test]
    fn common_density_shift_leaves_flow_unchanged() {
        let grid = TorusGrid::new(1, 32).unwrap();
        let f = DensityField::torus(|x| 0.3 * (2.0 * PI * x[0]).cos());
        let g = DensityField::torus(|x| 0.2 * (2.0 * PI * x[0]).sin());
        let p1 = ParabolicProblem::new(grid, &f, &g).unwrap();
        let p2 = ParabolicProblem::new(grid, &f.shifted(1.5), &g.shifted(1.5)).unwrap();
        let a = solve_parabolic(&p1, vec![0.0; 32], p1.default_dt(), &[0.05]).unwrap();
        let b = solve_parabolic(&p2, vec![0.0; 32], p2.default_dt(), &[0.05]).unwrap();
        for (x, y) in a[0].u.iter().zip(&b[0].u) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn oversized_step_is_rejected() {
        let grid = TorusGrid::new(1, 32).unwrap();
        let f = DensityField::constant(0.0);
        let problem = ParabolicProblem::new(grid, &f, &f).unwrap();
        let state = ParabolicState::new(&problem, vec![0.0; 32], 0.6 * grid.spacing().powi(2)).unwrap();
        assert!(matches!(parabolic_step(&state, &problem), Err(Error::Unstable { .. })));
    }

    #[test]
    fn non_quasiconvex_start_rejected() {
        let grid = TorusGrid::new(1, 32).unwrap();
        let f = DensityField::constant(0.0);
        let problem = ParabolicProblem::new(grid, &f, &f).unwrap();
        let u: Vec<f64> = (0..32).map(|i| (2.0 * PI * i as f64 / 32.0).cos()).collect();
        assert!(matches!(
            ParabolicState::new(&problem, u, problem.default_dt()),
            Err(Error::QuasiConvexityLost { .. })
        ));
    }
}
