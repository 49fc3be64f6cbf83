//! Command-line front end: configuration ingestion, run orchestration and
//! emission of CSV/JSON artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::{self, ResidualReport};
use crate::error::{Error, Result};
use crate::model::{self, DerivedParams, PhysicalParams};
use crate::observables::{self, SlopeFit, SpreadSeries, WignerGridSpec};
use crate::solver::{self, EvolveOptions, Method, Trajectory};

/// Default output root when `--out` is not given.
pub const OUT_ENV: &str = "MAGNON_WALK_OUT";
/// Phase distributions are written for this many leading steps.
pub const PHASE_STEPS: usize = 4;
/// Longest default fit, in steps.
pub const DEFAULT_FIT_STEPS: usize = 7;

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_VERIFICATION: u8 = 3;

/// Which exit status an error maps to.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Numerical(_)
        | Error::Propagation { .. }
        | Error::FlatDistribution { .. }
        | Error::NegativeTime(_)
        | Error::DimensionMismatch { .. } => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Emit {
    pub timeseries: bool,
    pub holevo: bool,
    pub phase: bool,
    pub wigner: bool,
    pub fit: bool,
}

impl Default for Emit {
    fn default() -> Self {
        Self {
            timeseries: true,
            holevo: true,
            phase: true,
            wigner: true,
            fit: true,
        }
    }
}

/// Fully resolved run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub params: PhysicalParams,
    pub method: Method,
    pub samples_per_segment: usize,
    pub wigner_grid: WignerGridSpec,
    pub fit_steps: usize,
    pub phase_steps: usize,
    pub out: PathBuf,
    pub emit: Emit,
}

impl RunConfig {
    pub fn from_params(params: PhysicalParams, out: impl Into<PathBuf>) -> Self {
        let fit_steps = params.n_steps.min(DEFAULT_FIT_STEPS);
        Self {
            preset: None,
            params,
            method: Method::Expm,
            samples_per_segment: EvolveOptions::default().samples_per_segment,
            wigner_grid: WignerGridSpec::default(),
            fit_steps,
            phase_steps: PHASE_STEPS,
            out: out.into(),
            emit: Emit::default(),
        }
    }

    pub fn from_preset(name: &str, out: impl Into<PathBuf>) -> Result<Self> {
        Ok(Self {
            preset: Some(name.to_string()),
            ..Self::from_params(PhysicalParams::preset(name)?, out)
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.wigner_grid.validate()?;
        if self.samples_per_segment == 0 {
            return Err(Error::Config("samples_per_segment must be at least 1".into()));
        }
        if self.emit.fit && (self.fit_steps < 2 || self.fit_steps > self.params.n_steps) {
            return Err(Error::Config(format!(
                "fit_steps {} outside 2..={}",
                self.fit_steps, self.params.n_steps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SolverSection {
    method: Option<Method>,
    samples_per_segment: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AnalysisSection {
    fit_steps: Option<usize>,
    phase_steps: Option<usize>,
    wigner_grid: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OutputSection {
    dir: Option<PathBuf>,
    #[serde(flatten)]
    emit: Option<Emit>,
}

/// On-disk TOML configuration. `[params]` overrides individual fields of
/// the preset (default `base`).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    preset: Option<String>,
    params: toml::Table,
    solver: SolverSection,
    analysis: AnalysisSection,
    output: OutputSection,
}

/// `half:points` for a square grid or `x_min:x_max:nx:p_min:p_max:np`.
pub fn parse_wigner_grid(s: &str) -> Result<WignerGridSpec> {
    let bad = || Error::Config(format!("bad Wigner grid `{s}` (expected half:points or x0:x1:nx:p0:p1:np)"));
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let f = |k: usize| parts[k].parse::<f64>().map_err(|_| bad());
    let n = |k: usize| parts[k].parse::<usize>().map_err(|_| bad());
    let spec = match parts.len() {
        2 => WignerGridSpec::square(f(0)?, n(1)?),
        6 => WignerGridSpec {
            x_min: f(0)?,
            x_max: f(1)?,
            nx: n(2)?,
            p_min: f(3)?,
            p_max: f(4)?,
            np: n(5)?,
        },
        _ => return Err(bad()),
    };
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(spec)
}

fn merge_params(base: &PhysicalParams, overrides: &toml::Table) -> Result<PhysicalParams> {
    let mut table = match toml::Value::try_from(base) {
        Ok(toml::Value::Table(t)) => t,
        _ => return Err(Error::Config("cannot serialize preset".into())),
    };
    for (key, value) in overrides {
        let value = match (key.as_str(), value) {
            // A bare number is a real displacement.
            ("alpha", toml::Value::Float(x)) => toml::Value::Array(vec![(*x).into(), 0.0.into()]),
            ("alpha", toml::Value::Integer(x)) => toml::Value::Array(vec![(*x as f64).into(), 0.0.into()]),
            (k, toml::Value::Integer(x)) if base_is_float(k) => toml::Value::Float(*x as f64),
            _ => value.clone(),
        };
        table.insert(key.clone(), value);
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| Error::Config(format!("[params]: {e}")))
}

fn base_is_float(key: &str) -> bool {
    matches!(
        key,
        "nu_q" | "nu_d_split" | "nu_eta" | "nu_eps0" | "gamma1" | "gamma_phi" | "gamma_c"
    )
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Parameter preset: base, realistic or realistic-gamma1.
    #[arg(long)]
    pub preset: Option<String>,
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of walk steps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Propagation method: expm or rk4.
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub samples_per_segment: Option<usize>,
    /// Steps entering the log-log fit.
    #[arg(long)]
    pub fit_steps: Option<usize>,
    /// `half:points` or `x0:x1:nx:p0:p1:np`.
    #[arg(long)]
    pub wigner_grid: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Skip the Wigner grids.
    #[arg(long)]
    pub no_wigner: bool,
}

fn read_config(path: &Path) -> Result<ConfigFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn default_out(name: &str) -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
        .join(name)
}

/// Resolves file plus flags into a [`RunConfig`]. Flags win over the file.
pub fn resolve(args: &RunArgs) -> Result<RunConfig> {
    let file = match &args.config {
        Some(path) => read_config(path)?,
        None => ConfigFile::default(),
    };
    let preset = args
        .preset
        .clone()
        .or(file.preset.clone())
        .unwrap_or_else(|| "base".to_string());
    let mut params = merge_params(&PhysicalParams::preset(&preset)?, &file.params)?;
    if let Some(steps) = args.steps {
        params.n_steps = steps;
    }
    let name = args
        .config
        .as_ref()
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| preset.clone());
    let out = args
        .out
        .clone()
        .or(file.output.dir.clone())
        .unwrap_or_else(|| default_out(&name));

    let mut cfg = RunConfig::from_params(params, out);
    cfg.preset = Some(preset);
    if let Some(m) = args.method.or(file.solver.method) {
        cfg.method = m;
    }
    if let Some(s) = args.samples_per_segment.or(file.solver.samples_per_segment) {
        cfg.samples_per_segment = s;
    }
    if let Some(k) = args.fit_steps.or(file.analysis.fit_steps) {
        cfg.fit_steps = k;
    }
    if let Some(k) = file.analysis.phase_steps {
        cfg.phase_steps = k;
    }
    if let Some(g) = args.wigner_grid.as_deref().or(file.analysis.wigner_grid.as_deref()) {
        cfg.wigner_grid = parse_wigner_grid(g)?;
    }
    if let Some(emit) = file.output.emit {
        cfg.emit = emit;
    }
    if args.no_wigner {
        cfg.emit.wigner = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_trace_drift: f64,
    pub max_hermiticity_drift: f64,
    pub max_trace_error: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: RunConfig,
    pub derived: DerivedParams,
    /// File name to SHA-256 hex digest.
    pub artifacts: BTreeMap<String, String>,
    pub fit: Option<SlopeFit>,
    pub diagnostics: Diagnostics,
    pub wall_clock_s: f64,
    pub timestamp_unix: u64,
}

pub const MANIFEST: &str = "manifest.json";

/// Everything computed by one run before emission.
#[derive(Debug, Clone)]
pub struct RunData {
    pub derived: DerivedParams,
    pub trajectory: Trajectory,
    pub series: SpreadSeries,
    pub fit: Option<SlopeFit>,
}

/// Schedule, evolution and spread analysis.
pub fn simulate(cfg: &RunConfig) -> Result<RunData> {
    cfg.validate()?;
    let p = &cfg.params;
    let derived = model::derive(p)?;
    let schedule = model::pulse_schedule(p, &derived)?;
    let h_on = model::hamiltonian_rotframe(p, &derived, true)?;
    let h_off = model::hamiltonian_rotframe(p, &derived, false)?;
    let diss = model::dissipators(p)?;
    let rho0 = model::initial_state(p)?;
    let trajectory = solver::evolve(
        &schedule,
        &rho0,
        &h_on,
        &h_off,
        &diss,
        EvolveOptions {
            method: cfg.method,
            samples_per_segment: cfg.samples_per_segment,
            snapshots: true,
        },
    )?;
    let series = SpreadSeries::from_trajectory(&trajectory, p.fock_dim, p.m_phase)?;
    let fit = if cfg.emit.fit {
        Some(observables::loglog_slope(&series, cfg.fit_steps)?)
    } else {
        None
    };
    Ok(RunData {
        derived,
        trajectory,
        series,
        fit,
    })
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))
}

struct Writer<'a> {
    dir: &'a Path,
    checksums: BTreeMap<String, String>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.checksums.insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }
}

/// Writes the data files of `data` into `cfg.out`; returns their checksums.
pub fn emit(data: &RunData, cfg: &RunConfig) -> Result<BTreeMap<String, String>> {
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let mut w = Writer {
        dir: &cfg.out,
        checksums: BTreeMap::new(),
    };
    let fock = cfg.params.fock_dim;

    if cfg.emit.timeseries {
        let rows = data.trajectory.samples.iter().map(|s| {
            vec![
                fmt_f64(s.t),
                fmt_f64(s.n_c),
                fmt_f64(s.p_e),
                fmt_f64(s.p_g),
                u8::from(s.drive_on).to_string(),
            ]
        });
        w.put("timeseries.csv", &csv_bytes(&["t_ns", "n_c", "P_e", "P_g", "drive_on"], rows)?)?;
    }
    if cfg.emit.holevo {
        let rows = data.series.points.iter().map(|p| {
            vec![p.step.to_string(), fmt_f64(p.t), fmt_f64(p.sharpness), fmt_f64(p.sigma_h)]
        });
        w.put("holevo.csv", &csv_bytes(&["step", "t_ns", "sharpness", "sigma_H"], rows)?)?;
    }
    for snap in &data.trajectory.snapshots {
        let need_phase = cfg.emit.phase && snap.step <= cfg.phase_steps;
        if !need_phase && !cfg.emit.wigner {
            continue;
        }
        let rho_m = observables::reduce_boson(&snap.rho, fock)?;
        if need_phase {
            let dist = observables::phase_distribution(&rho_m, cfg.params.m_phase)?;
            let rows = dist.phi.iter().zip(&dist.p).map(|(phi, p)| vec![fmt_f64(*phi), fmt_f64(*p)]);
            w.put(&format!("phase_step{}.csv", snap.step), &csv_bytes(&["phi_rad", "P"], rows)?)?;
        }
        if cfg.emit.wigner {
            let grid = observables::wigner(&rho_m, &cfg.wigner_grid)?;
            let rows = grid.w.indexed_iter().map(|((i, j), v)| {
                vec![fmt_f64(grid.x[i]), fmt_f64(grid.p[j]), fmt_f64(*v)]
            });
            w.put(&format!("wigner_step{}.csv", snap.step), &csv_bytes(&["x", "p", "W"], rows)?)?;
        }
    }
    if let (true, Some(fit)) = (cfg.emit.fit, &data.fit) {
        let json = serde_json::json!({
            "slope": fit.slope,
            "stderr": fit.stderr,
            "intercept": fit.intercept,
            "points_used": fit.points_used,
        });
        let mut bytes = serde_json::to_vec_pretty(&json).map_err(|e| Error::Config(e.to_string()))?;
        bytes.push(b'\n');
        w.put("fit.json", &bytes)?;
    }
    Ok(w.checksums)
}

/// Simulates, emits and writes the manifest.
pub fn run(cfg: &RunConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let data = simulate(cfg)?;
    let artifacts = emit(&data, cfg)?;
    let traj = &data.trajectory;
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        derived: data.derived.clone(),
        artifacts,
        fit: data.fit.clone(),
        diagnostics: Diagnostics {
            max_trace_drift: traj.max_drift.trace,
            max_hermiticity_drift: traj.max_drift.hermiticity,
            max_trace_error: traj.max_trace_error,
            min_eigenvalue: traj.min_eigenvalue,
        },
        wall_clock_s: start.elapsed().as_secs_f64(),
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    let path = cfg.out.join(MANIFEST);
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    bytes.push(b'\n');
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Runs the algebra suite; `Ok(reports)` regardless of pass/fail.
pub fn verify() -> Result<Vec<ResidualReport>> {
    algebra::run_suite()
}

/// Runs independent configurations on worker threads, each into
/// `<root>/<config stem>` unless the config names its own directory.
pub fn batch(configs: &[PathBuf], root: Option<&Path>, base: &RunArgs) -> Vec<(PathBuf, Result<RunManifest>)> {
    let jobs: Vec<(PathBuf, Result<RunConfig>)> = configs
        .iter()
        .map(|path| {
            let mut args = base.clone();
            args.config = Some(path.clone());
            args.preset = None;
            if let (Some(root), Some(stem)) = (root, path.file_stem()) {
                args.out = Some(root.join(stem));
            }
            (path.clone(), resolve(&args))
        })
        .collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .into_iter()
            .map(|(path, cfg)| scope.spawn(move || (path, cfg.and_then(|c| run(&c)))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("batch worker panicked"))
            .collect()
    })
}

#[derive(Debug, Parser)]
#[command(name = "magnon-walk", version, about = "Phase-space quantum walk of a quasimagnon mode driven through a flux-qubit coin")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one configuration and write its artifacts.
    Run(RunArgs),
    /// Check the operator identities behind the model.
    Verify {
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run several configuration files concurrently.
    Batch {
        configs: Vec<PathBuf>,
        /// Output root; each run goes to `<root>/<config stem>`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        method: Option<Method>,
        #[arg(long)]
        no_wigner: bool,
    },
}

fn report_error(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code(err))
}

fn print_run(m: &RunManifest) {
    eprintln!(
        "wrote {} files to {} in {:.1} s",
        m.artifacts.len() + 1,
        m.config.out.display(),
        m.wall_clock_s
    );
    if let Some(fit) = &m.fit {
        println!(
            "slope {:.4} +/- {:.4} over {} steps",
            fit.slope, fit.stderr, fit.points_used
        );
    }
}

pub fn main_with(cli: Cli) -> ExitCode {
    match cli.command {
        Command::Run(args) => match resolve(&args).and_then(|cfg| run(&cfg)) {
            Ok(m) => {
                print_run(&m);
                ExitCode::SUCCESS
            }
            Err(e) => report_error(&e),
        },
        Command::Verify { json } => match verify() {
            Ok(reports) => {
                if json {
                    println!("{}", serde_json::to_string_pretty(&reports).unwrap_or_default());
                } else {
                    for r in &reports {
                        println!("{}", r.line());
                    }
                }
                if reports.iter().all(|r| r.passed) {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_VERIFICATION)
                }
            }
            Err(e) => report_error(&e),
        },
        Command::Batch {
            configs,
            out,
            method,
            no_wigner,
        } => {
            if configs.is_empty() {
                eprintln!("error: batch needs at least one config file");
                return ExitCode::from(EXIT_CONFIG);
            }
            let base = RunArgs {
                method,
                no_wigner,
                ..RunArgs::default()
            };
            let root = out.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from));
            let mut worst = 0u8;
            for (path, result) in batch(&configs, root.as_deref(), &base) {
                match result {
                    Ok(m) => {
                        eprint!("{}: ", path.display());
                        print_run(&m);
                    }
                    Err(e) => {
                        eprintln!("{}: error: {e}", path.display());
                        worst = worst.max(exit_code(&e));
                    }
                }
            }
            ExitCode::from(worst)
        }
    }
}

pub fn main() -> ExitCode {
    main_with(Cli::parse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::re;

    fn tiny() -> PhysicalParams {
        PhysicalParams {
            fock_dim: 6,
            alpha: re(1.0),
            n_steps: 3,
            m_phase: 32,
            ..PhysicalParams::base()
        }
    }

    #[test]
    fn wigner_grid_forms() {
        assert_eq!(parse_wigner_grid("4.5:101").unwrap(), WignerGridSpec::square(4.5, 101));
        let g = parse_wigner_grid("-1:2:3:-4:5:6").unwrap();
        assert_eq!((g.x_min, g.x_max, g.nx, g.p_min, g.p_max, g.np), (-1.0, 2.0, 3, -4.0, 5.0, 6));
        assert!(parse_wigner_grid("4.5").is_err());
        assert!(parse_wigner_grid("1:0").is_err());
        assert!(parse_wigner_grid("a:3").is_err());
    }

    #[test]
    fn params_override_preset() {
        let t: toml::Table = toml::from_str("fock_dim = 20\nalpha = 2\nnu_q = 7\nrabi_convention = \"bare\"").unwrap();
        let p = merge_params(&PhysicalParams::base(), &t).unwrap();
        assert_eq!(p.fock_dim, 20);
        assert_eq!(p.alpha, re(2.0));
        assert_eq!(p.nu_q, 7.0);
        assert_eq!(p.rabi_convention, model::RabiConvention::Bare);
        let t: toml::Table = toml::from_str("alpha = [1.0, -0.5]").unwrap();
        assert_eq!(merge_params(&PhysicalParams::base(), &t).unwrap().alpha.im, -0.5);
        let t: toml::Table = toml::from_str("bogus = 1").unwrap();
        assert!(matches!(merge_params(&PhysicalParams::base(), &t), Err(Error::Config(_))));
    }

    #[test]
    fn default_fit_lengths() {
        assert_eq!(RunConfig::from_preset("base", "x").unwrap().fit_steps, 7);
        assert_eq!(RunConfig::from_preset("realistic", "x").unwrap().fit_steps, 4);
    }

    #[test]
    fn validation_and_exit_codes() {
        let mut cfg = RunConfig::from_params(tiny(), "x");
        cfg.fit_steps = 9;
        let err = cfg.validate().unwrap_err();
        assert_eq!(exit_code(&err), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Numerical("x".into())), EXIT_NUMERICAL);
        assert_eq!(
            exit_code(&Error::Propagation {
                segment: 0,
                source: Box::new(Error::NegativeTime(-1.0))
            }),
            EXIT_NUMERICAL
        );
    }

    #[test]
    fn fmt_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn tiny_run_writes_everything() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::from_params(tiny(), dir.path());
        cfg.wigner_grid = WignerGridSpec::square(2.0, 5);
        cfg.fit_steps = 3;
        cfg.samples_per_segment = 2;
        let m = run(&cfg).unwrap();
        let names: Vec<&str> = m.artifacts.keys().map(String::as_str).collect();
        assert_eq!(
            names,
            [
                "fit.json",
                "holevo.csv",
                "phase_step1.csv",
                "phase_step2.csv",
                "phase_step3.csv",
                "timeseries.csv",
                "wigner_step1.csv",
                "wigner_step2.csv",
                "wigner_step3.csv"
            ]
        );
        assert_eq!(read_manifest(dir.path()).unwrap(), m);
    }
}
