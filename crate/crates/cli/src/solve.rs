//! Pieces shared by the transport and antenna commands.

use std::time::Instant;

use entropic_ot::sinkhorn::{entropic_cost, m_max, marginal_errors};
use entropic_ot::{Chart, DensityField, KernelApplicator, ManifoldPoint, Potential, SinkhornState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::Config;
use crate::expr::Expr;
use crate::output::{coordinate_names, Cell, OutDir};
use crate::CliError;

pub(crate) fn config_error(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Density exponent over torus coordinates `x1..xn`.
pub(crate) fn torus_field(source: &str, n: usize) -> Result<DensityField, CliError> {
    let names = coordinate_names(n);
    let vars: Vec<&str> = names.iter().map(String::as_str).collect();
    let expr = Expr::parse(source, &vars).map_err(|e| CliError::Config(format!("'{source}': {e}")))?;
    Ok(DensityField::torus(move |x| expr.eval(x)))
}

/// Density exponent over `theta` (colatitude), `phi` (longitude) and the
/// Cartesian coordinates `x, y, z` of the unit sphere.
pub(crate) fn sphere_field(source: &str) -> Result<DensityField, CliError> {
    let expr = Expr::parse(source, &["theta", "phi", "x", "y", "z"])
        .map_err(|e| CliError::Config(format!("'{source}': {e}")))?;
    Ok(DensityField::sphere(move |phi, theta| {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        expr.eval(&[theta, phi, st * cp, st * sp, ct])
    }))
}

pub(crate) fn point_header(chart: Chart) -> Vec<String> {
    match chart {
        Chart::Torus(n) => coordinate_names(n),
        Chart::Sphere => vec!["theta".into(), "phi".into()],
    }
}

/// Torus coordinates, or `(θ, φ)` on the sphere.
pub(crate) fn point_cells(p: &ManifoldPoint) -> Vec<Cell> {
    match p {
        ManifoldPoint::Torus(c) => c.iter().map(|&x| Cell::Num(x)).collect(),
        ManifoldPoint::Sphere { phi, theta } => vec![Cell::Num(*theta), Cell::Num(*phi)],
    }
}

fn initial_potential(cfg: &Config, len: usize, k: f64) -> Result<Potential, CliError> {
    let values = if cfg.init_amplitude > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        (0..len).map(|_| cfg.init_amplitude * rng.gen_range(-1.0..1.0)).collect()
    } else {
        vec![0.0; len]
    };
    Potential::new(values, k).map_err(config_error)
}

fn dump_state(out: &OutDir, kern: &dyn KernelApplicator, u: &[f64]) -> Result<std::path::PathBuf, CliError> {
    let mut header = point_header(kern.source().chart());
    header.push("u".into());
    let rows = kern.source().points().iter().zip(u).map(|(p, &x)| {
        let mut row = point_cells(p);
        row.push(Cell::Num(x));
        row
    });
    out.csv("abort_state.csv", &header, rows)
}

/// Run the scaled iteration to the configured tolerance or step budget.
/// Numerical failures dump the last good potential and abort.
pub(crate) fn run_sinkhorn(
    kern: &dyn KernelApplicator,
    cfg: &Config,
    out: &OutDir,
) -> Result<(SinkhornState, f64), CliError> {
    let u0 = initial_potential(cfg, kern.source().len(), kern.k())?;
    let start = Instant::now();
    let mut state = match SinkhornState::new(u0.clone(), kern) {
        Ok(s) => s,
        Err(e) => {
            let dump = dump_state(out, kern, u0.values())?;
            return Err(CliError::Numerical { message: e.to_string(), dump });
        }
    };
    if let Err(e) = state.run_until(kern, cfg.tol, cfg.schedule_a) {
        let dump = dump_state(out, kern, state.u().values())?;
        return Err(CliError::Numerical { message: e.to_string(), dump });
    }
    Ok((state, start.elapsed().as_secs_f64()))
}

pub(crate) fn write_trace(out: &OutDir, state: &SinkhornState) -> Result<(), CliError> {
    let header: Vec<String> =
        ["m", "F", "I_mu", "e_row", "e_col", "sup_change", "wall_time_ms"].iter().map(|s| s.to_string()).collect();
    let rows = state.trace().iter().map(|r| {
        vec![Cell::Int(r.m), r.f.into(), r.i_mu.into(), r.e_row.into(), r.e_col.into(), r.sup_change.into(), r.wall_time_ms.into()]
    });
    out.csv("trace.csv", &header, rows)?;
    Ok(())
}

/// Potentials normalized by `u(base) = 0`, with `v` shifted to keep the plan.
pub(crate) fn normalized_potentials(state: &SinkhornState) -> (Vec<f64>, Vec<f64>) {
    let u = state.u();
    let shift = u.values()[u.base_index()];
    let uu = u.values().iter().map(|x| x - shift).collect();
    let vv = state.v().values().iter().map(|x| x + shift).collect();
    (uu, vv)
}

/// `potentials.csv`: one row per point with `u` and `v` when both measures
/// share their support, otherwise source rows (`u`) followed by target rows (`v`).
pub(crate) fn write_potentials(out: &OutDir, kern: &dyn KernelApplicator, state: &SinkhornState) -> Result<(), CliError> {
    let (u, v) = normalized_potentials(state);
    let (mu, nu) = (kern.source(), kern.target());
    let mut header = point_header(mu.chart());
    header.extend(["u".to_string(), "v".to_string()]);
    let rows: Vec<Vec<Cell>> = if mu.points() == nu.points() {
        mu.points()
            .iter()
            .zip(u.iter().zip(&v))
            .map(|(p, (&a, &b))| {
                let mut row = point_cells(p);
                row.extend([Cell::Num(a), Cell::Num(b)]);
                row
            })
            .collect()
    } else {
        let src = mu.points().iter().zip(&u).map(|(p, &a)| {
            let mut row = point_cells(p);
            row.extend([Cell::Num(a), Cell::Empty]);
            row
        });
        let dst = nu.points().iter().zip(&v).map(|(p, &b)| {
            let mut row = point_cells(p);
            row.extend([Cell::Empty, Cell::Num(b)]);
            row
        });
        src.chain(dst).collect()
    };
    out.csv("potentials.csv", &header, rows)?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub(crate) struct RunSummary {
    pub k: f64,
    pub n_points: usize,
    pub n_target_points: usize,
    pub m_stop: usize,
    pub m_max: usize,
    pub stop_reason: &'static str,
    pub entropic_cost: f64,
    pub cost_warning: bool,
    pub e_row: f64,
    pub e_col: f64,
    pub wall_time_s: f64,
}

pub(crate) fn run_summary(
    kern: &dyn KernelApplicator,
    cfg: &Config,
    state: &SinkhornState,
    wall: f64,
) -> Result<RunSummary, CliError> {
    let (e_row, e_col) = marginal_errors(state, kern).map_err(config_error)?;
    let cost = entropic_cost(state, kern).map_err(config_error)?;
    Ok(RunSummary {
        k: kern.k(),
        n_points: kern.source().len(),
        n_target_points: kern.target().len(),
        m_stop: state.m(),
        m_max: m_max(kern.k(), cfg.schedule_a).map_err(config_error)?,
        stop_reason: state.stop_reason().map_or("none", |r| r.as_str()),
        entropic_cost: cost.value,
        cost_warning: cost.warning,
        e_row,
        e_col,
        wall_time_s: wall,
    })
}
