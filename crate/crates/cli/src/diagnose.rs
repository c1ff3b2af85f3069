//! Self-checks of the numerical building blocks, reported as `report.json`.

use std::sync::Arc;
use std::time::Instant;

use clap::ValueEnum;
use entropic_ot::measures::{check_density_property, discretize_torus};
use entropic_ot::numeric::linear_fit;
use entropic_ot::sinkhorn::softmin_accelerated;
use entropic_ot::sphere::{Sht, SphereKernel, SphereKernelSpec, SphericalGrid};
use entropic_ot::stationary_phase::{shifted_lattice_check, standard_phase, stationary_phase_check};
use entropic_ot::torus::{TorusGrid, TorusKernel, TorusKernelSpec};
use entropic_ot::{DensityField, Direction, KernelApplicator, KernelMode, Potential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Config;
use crate::output::OutDir;
use crate::solve::{config_error, torus_field};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Lattice sums against their Laplace approximation.
    StationaryPhase,
    /// Ball masses of the discretized source density.
    Density,
    /// Spherical harmonic transform round trip.
    Sht,
    /// Scaling of one softmin sweep with the number of points.
    Bench,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::StationaryPhase => "stationary-phase",
            Suite::Density => "density",
            Suite::Sht => "sht",
            Suite::Bench => "bench",
        }
    }
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    suite: &'static str,
    pass: bool,
    measurements: Value,
    failures: Vec<String>,
    config: &'a Config,
}

pub fn diagnose(suite: Suite, cfg: &Config, out: &OutDir) -> Result<(), CliError> {
    let mut failures = Vec::new();
    let measurements = match suite {
        Suite::StationaryPhase => stationary_phase(cfg, &mut failures)?,
        Suite::Density => density(cfg, &mut failures)?,
        Suite::Sht => sht(cfg, &mut failures)?,
        Suite::Bench => bench(cfg, &mut failures)?,
    };
    let report = Report { suite: suite.name(), pass: failures.is_empty(), measurements, failures, config: cfg };
    out.json("report.json", &report)?;
    if report.pass {
        Ok(())
    } else {
        Err(CliError::SuiteFailure { suite: suite.name().to_string(), failures: report.failures })
    }
}

fn stationary_phase(cfg: &Config, failures: &mut Vec<String>) -> Result<Value, CliError> {
    let ks = &cfg.diagnostics.stationary_phase_ks;
    if ks.len() < 2 || ks.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(CliError::Config("stationary_phase_ks must list at least two successive doublings".into()));
    }
    let one = DensityField::constant(1.0);
    let mut rows = Vec::new();
    let mut errs = Vec::new();
    for &k in ks {
        let on = stationary_phase_check(&standard_phase(0.0), &one, &[0.0], k).map_err(config_error)?;
        let x0 = 1.0 / (2.0 * k as f64);
        let off = shifted_lattice_check(&standard_phase(x0), &one, &[x0], k).map_err(config_error)?;
        let ratio = off.err / on.err;
        if !(0.5..=2.0).contains(&ratio) {
            failures.push(format!("k = {k}: shifted error differs from the lattice error by a factor {ratio:.3}"));
        }
        errs.push(on.err);
        rows.push(json!({
            "k": k, "lhs": on.lhs, "rhs": on.rhs, "err": on.err, "err_times_k": on.err * k as f64,
            "shifted_err": off.err, "shifted_err_times_k": off.err * k as f64,
        }));
    }
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    for (r, k) in ratios.iter().zip(&ks[1..]) {
        if !(1.5..=2.8).contains(r) {
            failures.push(format!("error ratio {r:.3} at k = {k} outside [1.5, 2.8]"));
        }
    }
    Ok(json!({ "rows": rows, "successive_ratios": ratios }))
}

fn density(cfg: &Config, failures: &mut Vec<String>) -> Result<Value, CliError> {
    let k = cfg.k as usize;
    if cfg.k.fract() != 0.0 || k < 2 || !(1..=3).contains(&cfg.n) {
        return Err(CliError::Config("density diagnostics need an integer k ≥ 2 and n in 1..=3".into()));
    }
    let field = torus_field(&cfg.f, cfg.n)?;
    let measure = discretize_torus(&field, k, cfg.n).map_err(config_error)?;
    let values: Vec<f64> = measure.points().iter().map(|p| field.eval(p)).collect();
    let osc = values.iter().copied().fold(f64::NEG_INFINITY, f64::max) - values.iter().copied().fold(f64::INFINITY, f64::min);
    let stride = measure.len().div_ceil(512);
    let centers: Vec<_> = measure.points().iter().step_by(stride).cloned().collect();
    let mut rows = Vec::new();
    for &r in &cfg.diagnostics.density_radii {
        let report = check_density_property(&measure, cfg.k, r, &centers).map_err(config_error)?;
        let bound = (cfg.n as f64 * (r / 2.0).ln() - osc) / cfg.k;
        if report.violated || report.min_value < bound {
            failures.push(format!("radius {r}: min k⁻¹ ln m(B) = {} below bound {bound}", report.min_value));
        }
        rows.push(json!({ "radius": r, "min_value": report.min_value, "bound": bound, "worst_center": report.worst_center }));
    }
    Ok(json!({ "k": k, "n": cfg.n, "oscillation": osc, "centers": centers.len(), "rows": rows }))
}

fn sht(cfg: &Config, failures: &mut Vec<String>) -> Result<Value, CliError> {
    let w = cfg.diagnostics.sht_bandwidth;
    let grid = SphericalGrid::new(w).map_err(config_error)?;
    let transform = Sht::new(grid.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    // Projecting onto degrees ≤ W gives a band-limited reference field.
    let coeffs = transform.forward(&noise).map_err(config_error)?;
    let field = transform.inverse(&coeffs).map_err(config_error)?;
    let back = transform.forward(&field).map_err(config_error)?;
    let coeff_err = back.max_abs_diff(&coeffs) / coeffs.max_abs();
    let again = transform.inverse(&back).map_err(config_error)?;
    let scale = field.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let grid_err = field.iter().zip(&again).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
    for (what, err) in [("coefficient", coeff_err), ("grid", grid_err)] {
        if !(err <= 1e-10) {
            failures.push(format!("{what} round-trip error {err:e} exceeds 1e-10"));
        }
    }
    Ok(json!({ "bandwidth": w, "grid_points": grid.len(), "coefficient_error": coeff_err, "grid_error": grid_err }))
}

fn median_time(mut run: impl FnMut() -> Result<(), CliError>, reps: usize) -> Result<f64, CliError> {
    run()?;
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        run()?;
        times.push(start.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    Ok(times[reps / 2])
}

fn sweep_time(kern: &dyn KernelApplicator, reps: usize) -> Result<f64, CliError> {
    let u = Potential::zeros(kern.source().len(), kern.k()).map_err(config_error)?;
    median_time(
        || {
            let v = softmin_accelerated(&u, Direction::XToY, kern).map_err(config_error)?;
            softmin_accelerated(&v, Direction::YToX, kern).map_err(config_error)?;
            Ok(())
        },
        reps,
    )
}

fn slope(points: &[(usize, f64)]) -> Result<f64, CliError> {
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    Ok(linear_fit(&xs, &ys).map_err(config_error)?.0)
}

fn bench(cfg: &Config, failures: &mut Vec<String>) -> Result<Value, CliError> {
    let d = &cfg.diagnostics;
    let reps = d.bench_reps.max(1);
    let mut result = serde_json::Map::new();
    for target in &d.bench_targets {
        let (timings, range) = match target.as_str() {
            "torus" => {
                let mut timings = Vec::new();
                for &k in &d.bench_torus_ks {
                    let grid = TorusGrid::new(d.bench_torus_n, k).map_err(config_error)?;
                    let mu = grid.uniform_measure().map_err(config_error)?;
                    let kern = TorusKernel::new(mu.clone(), mu, TorusKernelSpec::GaussianCost, KernelMode::Accelerated)
                        .map_err(config_error)?;
                    timings.push((grid.len(), sweep_time(&kern, reps)?));
                }
                (timings, 1.0..=1.3)
            }
            "sphere" => {
                let mut timings = Vec::new();
                for &w in &d.bench_sphere_bandwidths {
                    let grid = SphericalGrid::new(w).map_err(config_error)?;
                    let mu = grid.uniform_measure().map_err(config_error)?;
                    let k = w as f64;
                    let sht = Arc::new(Sht::new(grid.clone()));
                    let spec = SphereKernelSpec::heat_default(k);
                    let kern = SphereKernel::on_grid(sht, mu.clone(), mu, spec, k, KernelMode::Accelerated)
                        .map_err(config_error)?;
                    timings.push((grid.len(), sweep_time(&kern, reps)?));
                }
                (timings, 1.35..=1.7)
            }
            other => return Err(CliError::Config(format!("unknown bench target '{other}' (torus or sphere)"))),
        };
        if timings.len() < 2 {
            return Err(CliError::Config(format!("bench target {target} needs at least two sizes")));
        }
        let s = slope(&timings)?;
        if !range.contains(&s) {
            failures.push(format!("{target} slope {s:.3} outside [{}, {}]", range.start(), range.end()));
        }
        let rows: Vec<Value> = timings.iter().map(|(n, t)| json!({ "points": n, "median_seconds": t })).collect();
        result.insert(target.clone(), json!({ "slope": s, "expected": [range.start(), range.end()], "rows": rows }));
    }
    Ok(Value::Object(result))
}
