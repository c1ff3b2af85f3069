//! Transport, antenna and parabolic runs.

use std::sync::Arc;

use entropic_ot::measures::{discretize_sphere, discretize_torus, load_point_cloud};
use entropic_ot::parabolic::{
    check_quasiconvex, exp_convergence_fit, ma_residual, solve_parabolic, ParabolicProblem,
};
use entropic_ot::sinkhorn::DenseKernel;
use entropic_ot::sphere::{
    antenna_height, pushforward_discrepancy, reflector_map, Sht, SphereKernel, SphereKernelSpec, SphericalGrid,
};
use entropic_ot::torus::{torus_cost, torus_heat_kernel, TorusGrid, TorusKernel, TorusKernelSpec};
use entropic_ot::{Chart, DiscreteMeasure, Error, KernelApplicator, KernelMode, ManifoldPoint};
use serde::Serialize;

use crate::config::{Backend, Config, KernelKind};
use crate::output::{coordinate_names, Cell, OutDir};
use crate::solve::{
    config_error, normalized_potentials, point_cells, point_header, run_sinkhorn, run_summary, sphere_field,
    torus_field, write_potentials, write_trace, RunSummary,
};
use crate::CliError;

fn mode(backend: Option<Backend>) -> KernelMode {
    if backend == Some(Backend::Direct) {
        KernelMode::ExactLog
    } else {
        KernelMode::Accelerated
    }
}

fn load(path: &std::path::Path, cfg: &Config, chart: Chart) -> Result<DiscreteMeasure, CliError> {
    let m = load_point_cloud(path, cfg.renormalize).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if m.chart() != chart {
        return Err(CliError::Config(format!("{}: expected {chart:?} points, found {:?}", path.display(), m.chart())));
    }
    Ok(m)
}

fn torus_spec(cfg: &Config) -> TorusKernelSpec {
    match cfg.kernel {
        Some(KernelKind::Heat) => TorusKernelSpec::HeatKernel { t: cfg.heat_t.expect("resolved"), images: cfg.images },
        _ => TorusKernelSpec::GaussianCost,
    }
}

fn torus_kernel(cfg: &Config) -> Result<Box<dyn KernelApplicator>, CliError> {
    let (k, n) = (cfg.k as usize, cfg.n);
    let spec = torus_spec(cfg);
    let measure = |file: &Option<std::path::PathBuf>, expr: &str| match file {
        Some(path) => load(path, cfg, Chart::Torus(n)),
        None => discretize_torus(&torus_field(expr, n)?, k, n).map_err(config_error),
    };
    let mu = measure(&cfg.source_file, &cfg.f)?;
    let nu = measure(&cfg.target_file, &cfg.g)?;
    if cfg.source_file.is_none() && cfg.target_file.is_none() {
        return Ok(Box::new(TorusKernel::new(mu, nu, spec, mode(cfg.backend)).map_err(config_error)?));
    }
    let kf = cfg.k;
    let cost = move |a: &ManifoldPoint, b: &ManifoldPoint| {
        let (x, y) = (a.coords(), b.coords());
        match spec {
            TorusKernelSpec::GaussianCost => torus_cost(&x, &y),
            TorusKernelSpec::HeatKernel { t, images } => {
                let delta: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
                -torus_heat_kernel(&delta, t, images).ln() / kf
            }
        }
    };
    Ok(Box::new(DenseKernel::from_cost_fn(mu, nu, kf, KernelMode::ExactLog, cost).map_err(config_error)?))
}

fn sphere_kernel(cfg: &Config) -> Result<Box<dyn KernelApplicator>, CliError> {
    let w = cfg.bandwidth.expect("resolved");
    let grid = SphericalGrid::new(w).map_err(config_error)?;
    let measure = |file: &Option<std::path::PathBuf>, expr: &str| match file {
        Some(path) => load(path, cfg, Chart::Sphere),
        None => discretize_sphere(&sphere_field(expr)?, &grid).map_err(config_error),
    };
    let mu = measure(&cfg.source_file, &cfg.f)?;
    let nu = measure(&cfg.target_file, &cfg.g)?;
    let spec = match cfg.kernel {
        Some(KernelKind::Geodesic) => SphereKernelSpec::Geodesic,
        _ => SphereKernelSpec::Heat { t: cfg.heat_t.expect("resolved") },
    };
    let kern = if cfg.backend == Some(Backend::Direct) {
        SphereKernel::on_points(mu, nu, spec, cfg.k, w, KernelMode::ExactLog)
    } else {
        SphereKernel::on_grid(Arc::new(Sht::new(grid)), mu, nu, spec, cfg.k, KernelMode::Accelerated)
    };
    Ok(Box::new(kern.map_err(config_error)?))
}

#[derive(Serialize)]
struct TransportSummary<'a> {
    command: &'static str,
    #[serde(flatten)]
    run: RunSummary,
    config: &'a Config,
}

pub fn transport(cfg: &Config, out: &OutDir, sphere: bool) -> Result<(), CliError> {
    let kern = if sphere { sphere_kernel(cfg)? } else { torus_kernel(cfg)? };
    let (state, wall) = run_sinkhorn(kern.as_ref(), cfg, out)?;
    write_potentials(out, kern.as_ref(), &state)?;
    write_trace(out, &state)?;
    let summary = TransportSummary {
        command: if sphere { "transport sphere" } else { "transport torus" },
        run: run_summary(kern.as_ref(), cfg, &state, wall)?,
        config: cfg,
    };
    out.json("summary.json", &summary)?;
    Ok(())
}

#[derive(Serialize)]
struct AntennaSummary<'a> {
    command: &'static str,
    #[serde(flatten)]
    run: RunSummary,
    pushforward_discrepancy: f64,
    flagged_nodes: usize,
    h_min: f64,
    h_max: f64,
    config: &'a Config,
}

pub fn antenna(cfg: &Config, out: &OutDir) -> Result<(), CliError> {
    let k = cfg.k as usize;
    let grid = SphericalGrid::new(cfg.bandwidth.expect("resolved")).map_err(config_error)?;
    let mu = discretize_sphere(&sphere_field(&cfg.f)?, &grid).map_err(config_error)?;
    let nu = discretize_sphere(&sphere_field(&cfg.g)?, &grid).map_err(config_error)?;
    let kern = if cfg.backend == Some(Backend::Direct) {
        SphereKernel::on_points(mu, nu.clone(), SphereKernelSpec::Antenna, cfg.k, k, KernelMode::ExactLog)
    } else {
        let sht = Arc::new(Sht::new(grid.clone()));
        SphereKernel::on_grid(sht, mu, nu.clone(), SphereKernelSpec::Antenna, cfg.k, KernelMode::Accelerated)
    }
    .map_err(config_error)?;
    let (state, wall) = run_sinkhorn(&kern, cfg, out)?;
    let (u, _) = normalized_potentials(&state);
    // Scaling vector a = e^{-k u}, normalized so that h(base) = 1.
    let a: Vec<f64> = u.iter().map(|x| (-cfg.k * x).exp()).collect();
    let numerical = |e: Error| CliError::Numerical { message: e.to_string(), dump: out.path("potentials.csv") };
    let h = antenna_height(&a, cfg.k).map_err(|e| {
        write_potentials(out, &kern, &state).err().unwrap_or_else(|| numerical(e))
    })?;
    let field = reflector_map(&h, &grid).map_err(numerical)?;
    let discrepancy =
        pushforward_discrepancy(&field, kern.source().weights(), &nu, cfg.pushforward_bins).map_err(config_error)?;

    write_potentials(out, &kern, &state)?;
    write_trace(out, &state)?;
    let mut header = point_header(Chart::Sphere);
    header.push("h".into());
    let rows = kern.source().points().iter().zip(&h).map(|(p, &x)| {
        let mut row = point_cells(p);
        row.push(Cell::Num(x));
        row
    });
    out.csv("antenna.csv", &header, rows)?;
    let mut header = point_header(Chart::Sphere);
    header.extend(["rx", "ry", "rz", "flagged"].map(String::from));
    let rows = kern.source().points().iter().zip(&field.directions).enumerate().map(|(i, (p, r))| {
        let mut row = point_cells(p);
        row.extend(r.map(Cell::Num));
        row.push(Cell::Int(usize::from(field.flagged.binary_search(&i).is_ok())));
        row
    });
    out.csv("reflector.csv", &header, rows)?;
    let summary = AntennaSummary {
        command: "antenna",
        run: run_summary(&kern, cfg, &state, wall)?,
        pushforward_discrepancy: discrepancy,
        flagged_nodes: field.flagged.len(),
        h_min: h.iter().copied().fold(f64::INFINITY, f64::min),
        h_max: h.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        config: cfg,
    };
    out.json("summary.json", &summary)?;
    Ok(())
}

#[derive(Serialize)]
struct ParabolicSummary<'a> {
    command: &'static str,
    grid_points: usize,
    dt: f64,
    final_time: f64,
    final_residual: f64,
    min_eig: f64,
    fit_rate: Option<f64>,
    fit_a: Option<f64>,
    fit_points: Option<usize>,
    wall_time_s: f64,
    config: &'a Config,
}

pub fn parabolic(cfg: &Config, out: &OutDir) -> Result<(), CliError> {
    let p = &cfg.parabolic;
    let grid = TorusGrid::new(cfg.n, p.k_grid).map_err(config_error)?;
    let problem =
        ParabolicProblem::new(grid, &torus_field(&cfg.f, cfg.n)?, &torus_field(&cfg.g, cfg.n)?).map_err(config_error)?;
    let dt = p.dt_factor * grid.spacing() * grid.spacing();
    let times: Vec<f64> = (1..=p.samples).map(|i| p.t_end * i as f64 / p.samples as f64).collect();
    let start = std::time::Instant::now();
    let coords = |i: usize| grid.coords(i).into_iter().map(Cell::Num).collect::<Vec<_>>();
    let dump = |u: &[f64]| -> Result<std::path::PathBuf, CliError> {
        let mut header = coordinate_names(cfg.n);
        header.push("u".into());
        out.csv("abort_state.csv", &header, u.iter().enumerate().map(|(i, &x)| [coords(i), vec![Cell::Num(x)]].concat()))
    };
    let trajectory = match solve_parabolic(&problem, vec![0.0; grid.len()], dt, &times) {
        Ok(t) => t,
        Err(e @ (Error::QuasiConvexityLost { .. } | Error::Unstable { .. })) => {
            let (Error::QuasiConvexityLost { state, .. } | Error::Unstable { state, .. }) = &e else { unreachable!() };
            let dump = dump(state)?;
            return Err(CliError::Numerical { message: e.to_string(), dump });
        }
        Err(e @ Error::NonFinite(_)) => {
            let dump = dump(&[])?;
            return Err(CliError::Numerical { message: e.to_string(), dump });
        }
        Err(e) => return Err(config_error(e)),
    };
    let wall = start.elapsed().as_secs_f64();
    let mut rows = Vec::with_capacity(trajectory.len());
    let mut min_eig = f64::INFINITY;
    for s in &trajectory {
        let residual = ma_residual(&s.u, &problem).map_err(config_error)?;
        let q = check_quasiconvex(&s.u, grid).map_err(config_error)?;
        min_eig = min_eig.min(q.min_eig);
        rows.push(vec![Cell::Num(s.t), s.sup_change.into(), q.min_eig.into(), residual.into()]);
    }
    out.csv("parabolic.csv", &["t", "sup_change", "min_eig", "residual"].map(String::from), rows)?;
    let last = trajectory.last().expect("at least one sample");
    let mut header = coordinate_names(cfg.n);
    header.push("u".into());
    out.csv("potential.csv", &header, last.u.iter().enumerate().map(|(i, &x)| [coords(i), vec![Cell::Num(x)]].concat()))?;
    let samples: Vec<(f64, Vec<f64>)> = trajectory.iter().map(|s| (s.t, s.u.clone())).collect();
    let fit = exp_convergence_fit(&samples).ok();
    let summary = ParabolicSummary {
        command: "parabolic",
        grid_points: grid.len(),
        dt,
        final_time: last.t,
        final_residual: ma_residual(&last.u, &problem).map_err(config_error)?,
        min_eig,
        fit_rate: fit.map(|f| f.rate),
        fit_a: fit.map(|f| f.a_fit),
        fit_points: fit.map(|f| f.points),
        wall_time_s: wall,
        config: cfg,
    };
    out.json("summary.json", &summary)?;
    Ok(())
}
