//! Run configuration: a single JSON document, completed with defaults and
//! command-line overrides, then echoed in every summary.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Exact log-domain softmin over explicit cost rows.
    Direct,
    /// Torus convolution by FFT.
    Fft,
    /// Sphere kernel application by spherical harmonic transforms.
    Sht,
    /// Heat-kernel cost, applied by FFT on the torus and SHT on the sphere.
    Heat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    /// `e^{-k d²/2}` on the torus.
    Gaussian,
    Heat,
    /// `e^{-k d²/2}` with the geodesic distance on the sphere.
    Geodesic,
    /// `|x - y|^{2k}` on the sphere.
    Antenna,
}

/// Which command a configuration is resolved for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    TransportTorus,
    TransportSphere,
    Antenna,
    Parabolic,
    Diagnose,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParabolicConfig {
    pub k_grid: usize,
    /// `dt = dt_factor · dx²`.
    pub dt_factor: f64,
    pub t_end: f64,
    /// Number of equally spaced output times in `(0, t_end]`.
    pub samples: usize,
}

impl Default for ParabolicConfig {
    fn default() -> Self {
        ParabolicConfig { k_grid: 256, dt_factor: 0.2, t_end: 1.0, samples: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub stationary_phase_ks: Vec<usize>,
    pub density_radii: Vec<f64>,
    pub sht_bandwidth: usize,
    pub bench_targets: Vec<String>,
    pub bench_torus_n: usize,
    pub bench_torus_ks: Vec<usize>,
    pub bench_sphere_bandwidths: Vec<usize>,
    pub bench_reps: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            stationary_phase_ks: vec![64, 128, 256],
            density_radii: vec![0.05, 0.1, 0.2],
            sht_bandwidth: 16,
            bench_targets: vec!["torus".into()],
            bench_torus_n: 2,
            bench_torus_ks: vec![32, 64, 128, 256],
            bench_sphere_bandwidths: vec![16, 32, 64],
            bench_reps: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Inverse regularization; on the torus also the grid resolution.
    pub k: f64,
    /// Torus dimension.
    pub n: usize,
    /// Exponent of the source density `e^{-f}`.
    pub f: String,
    /// Exponent of the target density `e^{-g}`.
    pub g: String,
    pub source_file: Option<PathBuf>,
    pub target_file: Option<PathBuf>,
    pub renormalize: bool,
    pub backend: Option<Backend>,
    pub kernel: Option<KernelKind>,
    pub heat_t: Option<f64>,
    /// Image cutoff of the periodized torus heat kernel.
    pub images: usize,
    /// `R` in `W = R·k` for the sphere heat kernel.
    pub bandwidth_ratio: f64,
    pub bandwidth: Option<usize>,
    pub tol: f64,
    /// `A` in the step budget `⌈A k ln k⌉`.
    pub schedule_a: f64,
    pub seed: u64,
    /// Amplitude of the random initial potential; 0 starts from `u ≡ 0`.
    pub init_amplitude: f64,
    pub threads: Option<usize>,
    pub pushforward_bins: usize,
    pub parabolic: ParabolicConfig,
    pub diagnostics: DiagnosticsConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            k: 32.0,
            n: 1,
            f: "0".into(),
            g: "0".into(),
            source_file: None,
            target_file: None,
            renormalize: false,
            backend: None,
            kernel: None,
            heat_t: None,
            images: 3,
            bandwidth_ratio: 2.0,
            bandwidth: None,
            tol: 1e-9,
            schedule_a: 2.0,
            seed: 0,
            init_amplitude: 0.0,
            threads: None,
            pushforward_bins: 8,
            parabolic: ParabolicConfig::default(),
            diagnostics: DiagnosticsConfig::default(),
        }
    }
}

/// Values given on the command line, which take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub backend: Option<Backend>,
    pub k: Option<f64>,
    pub schedule_a: Option<f64>,
    pub threads: Option<usize>,
    pub renormalize: bool,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

fn bad(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(bad(format!("{name} = {x} must be positive")))
    }
}

fn integer_k(k: f64, min: f64) -> Result<usize, CliError> {
    if k.fract() != 0.0 || k < min {
        return Err(bad(format!("k = {k} must be an integer of at least {min}")));
    }
    Ok(k as usize)
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Config::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(b) = o.backend {
            self.backend = Some(b);
        }
        if let Some(k) = o.k {
            self.k = k;
        }
        if let Some(a) = o.schedule_a {
            self.schedule_a = a;
        }
        if let Some(t) = o.threads {
            self.threads = Some(t);
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.tol {
            self.tol = t;
        }
        self.renormalize |= o.renormalize;
    }

    fn uses_files(&self) -> bool {
        self.source_file.is_some() || self.target_file.is_some()
    }

    /// Fill in every context-dependent value and reject inconsistent settings.
    pub fn resolve(&mut self, problem: Problem) -> Result<(), CliError> {
        positive("k", self.k)?;
        positive("tol", self.tol)?;
        positive("schedule_a", self.schedule_a)?;
        if !(self.init_amplitude.is_finite() && self.init_amplitude >= 0.0) {
            return Err(bad("init_amplitude must be nonnegative"));
        }
        if self.threads == Some(0) {
            return Err(bad("threads must be at least 1"));
        }
        match problem {
            Problem::TransportTorus => self.resolve_torus(),
            Problem::TransportSphere => self.resolve_sphere(),
            Problem::Antenna => self.resolve_antenna(),
            Problem::Parabolic => self.resolve_parabolic(),
            Problem::Diagnose => Ok(()),
        }
    }

    fn resolve_heat_time(&mut self, heat: bool) -> Result<(), CliError> {
        match (heat, self.heat_t) {
            (true, None) => self.heat_t = Some(2.0 / self.k),
            (true, Some(t)) => positive("heat_t", t)?,
            (false, Some(_)) => return Err(bad("heat_t is only meaningful for the heat kernel")),
            (false, None) => {}
        }
        Ok(())
    }

    fn resolve_torus(&mut self) -> Result<(), CliError> {
        if !(1..=3).contains(&self.n) {
            return Err(bad(format!("torus dimension n = {} must be 1, 2 or 3", self.n)));
        }
        integer_k(self.k, 2.0)?;
        let backend = self.backend.unwrap_or(Backend::Fft);
        let kernel = match (backend, self.kernel) {
            (Backend::Sht, _) => return Err(bad("the sht backend is only available on the sphere")),
            (Backend::Heat, None | Some(KernelKind::Heat)) => KernelKind::Heat,
            (Backend::Heat, Some(other)) => return Err(bad(format!("backend heat conflicts with kernel {other:?}"))),
            (_, None) => KernelKind::Gaussian,
            (_, Some(k @ (KernelKind::Gaussian | KernelKind::Heat))) => k,
            (_, Some(other)) => return Err(bad(format!("kernel {other:?} is not defined on the torus"))),
        };
        if self.uses_files() && backend != Backend::Direct {
            return Err(bad("point-cloud inputs require the direct backend"));
        }
        if self.images == 0 {
            return Err(bad("images must be at least 1"));
        }
        self.backend = Some(backend);
        self.kernel = Some(kernel);
        self.resolve_heat_time(kernel == KernelKind::Heat)?;
        if self.bandwidth.is_some() {
            return Err(bad("bandwidth is only meaningful on the sphere"));
        }
        Ok(())
    }

    fn resolve_sphere(&mut self) -> Result<(), CliError> {
        let backend = self.backend.unwrap_or(Backend::Sht);
        let kernel = match (backend, self.kernel) {
            (Backend::Fft, _) => return Err(bad("the fft backend is only available on the torus")),
            (_, None | Some(KernelKind::Heat)) => KernelKind::Heat,
            (Backend::Direct, Some(KernelKind::Geodesic)) => KernelKind::Geodesic,
            (_, Some(KernelKind::Geodesic)) => return Err(bad("the geodesic kernel requires the direct backend")),
            (_, Some(other)) => return Err(bad(format!("kernel {other:?} is not available for sphere transport"))),
        };
        if self.uses_files() && backend != Backend::Direct {
            return Err(bad("point-cloud inputs require the direct backend"));
        }
        positive("bandwidth_ratio", self.bandwidth_ratio)?;
        if self.bandwidth.is_none() {
            self.bandwidth = Some((self.bandwidth_ratio * self.k).ceil() as usize);
        }
        if self.bandwidth == Some(0) {
            return Err(bad("bandwidth must be at least 1"));
        }
        self.backend = Some(backend);
        self.kernel = Some(kernel);
        self.resolve_heat_time(kernel == KernelKind::Heat)
    }

    fn resolve_antenna(&mut self) -> Result<(), CliError> {
        let k = integer_k(self.k, 1.0)?;
        let backend = self.backend.unwrap_or(Backend::Sht);
        if !matches!(backend, Backend::Sht | Backend::Direct) {
            return Err(bad(format!("backend {backend:?} is not available for the antenna problem")));
        }
        if !matches!(self.kernel, None | Some(KernelKind::Antenna)) {
            return Err(bad("the antenna problem uses the antenna kernel"));
        }
        if self.uses_files() {
            return Err(bad("the antenna problem runs on the equiangular grid; point clouds are not accepted"));
        }
        let w = *self.bandwidth.get_or_insert(k);
        if w < k {
            return Err(bad(format!("bandwidth {w} is below k = {k}")));
        }
        if self.pushforward_bins == 0 {
            return Err(bad("pushforward_bins must be at least 1"));
        }
        self.backend = Some(backend);
        self.kernel = Some(KernelKind::Antenna);
        self.resolve_heat_time(false)
    }

    fn resolve_parabolic(&mut self) -> Result<(), CliError> {
        if !(1..=2).contains(&self.n) {
            return Err(bad(format!("the parabolic solver supports n = 1 or 2, got {}", self.n)));
        }
        let p = &self.parabolic;
        if p.k_grid < 4 {
            return Err(bad("parabolic.k_grid must be at least 4"));
        }
        positive("parabolic.dt_factor", p.dt_factor)?;
        positive("parabolic.t_end", p.t_end)?;
        if p.samples == 0 {
            return Err(bad("parabolic.samples must be at least 1"));
        }
        if self.uses_files() {
            return Err(bad("the parabolic solver takes densities, not point clouds"));
        }
        Ok(())
    }
}
