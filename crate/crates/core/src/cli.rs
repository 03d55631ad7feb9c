//! Batch front door: simulate → estimate → factorize → calibrate → check → predict.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::Serialize;

use crate::arbitrage::{min_roundtrip_cost, predict_prices, RoundTripResult};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::hawkes::{self, simulate, simulate_prices, validate_spec, EventStream, ExpTerm, HawkesSpec};
use crate::io::{self, PriceModel, SpecFile};
use crate::kernels::{
    build_k1, nsa_check, omega_zero_gap, regularize_k2, AdmissibilityReport, ImpactKernel,
    K1Diagnostics, K2Report,
};
use crate::observables::{bin, bin_flows, BinOptions, BinnedSeries, ObservableSet, PricePath};
use crate::polymat::{factorize, invert_factor, SpectralFactor};

#[derive(Parser, Debug)]
#[command(name = "crossimpact", version, about = "Calibrate and check cross-impact kernels")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, env = "CROSSIMPACT_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Caps the worker threads of parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

/// Overrides applied on top of the config file.
#[derive(Args, Debug, Default, Clone)]
pub struct RunArgs {
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub events: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub prices: Vec<PathBuf>,
    #[arg(long)]
    pub bin_width: Option<f64>,
    #[arg(long)]
    pub tau_max: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub days: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate order flow (and prices when the spec has a price model).
    Simulate(RunArgs),
    /// Estimate the observables from flows and prices.
    Estimate(RunArgs),
    /// Estimate, then factorize the flow spectrum.
    Factorize(RunArgs),
    /// Full calibration of K¹ and K².
    Calibrate {
        #[command(flatten)]
        run: RunArgs,
        /// Also write kernels multiplied by this factor (e.g. 1e4 for basis points).
        #[arg(long)]
        display_scale: Option<f64>,
    },
    /// Admissibility report and round-trip search for a kernel directory.
    Check {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 8)]
        n_steps: usize,
        /// Round-trip horizon in seconds (default: 10 bins).
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Predicted prices `p0 + Σ_{s<t} K(t−s) q_s` on the kernel lattice.
    Predict {
        #[arg(long)]
        kernel: PathBuf,
        /// Event file; without it the flow is zero.
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        p0: Vec<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// End-to-end walkthrough on a built-in two-asset market.
    Demo {
        #[arg(long, default_value_t = 20)]
        days: usize,
        #[arg(long, default_value_t = 20_000.0)]
        horizon: f64,
        #[arg(long, default_value_t = 256)]
        tau_max: usize,
    },
}

/// Error tagged with the pipeline stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub source: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage `{}` failed: {}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        self.source.exit_code()
    }
}

type StageResult<T> = std::result::Result<T, StageError>;

fn stage<T>(name: &'static str, r: Result<T>) -> StageResult<T> {
    r.map_err(|source| StageError { stage: name, source })
}

/// Outcome of a command: process exit code (0 or 1) on success.
pub type Outcome = StageResult<i32>;

pub fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        // a second initialisation (tests) keeps the existing pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(&config_for(&cli, a)?),
        Command::Estimate(a) => cmd_estimate(&config_for(&cli, a)?),
        Command::Factorize(a) => cmd_factorize(&config_for(&cli, a)?),
        Command::Calibrate { run, display_scale } => {
            let cfg = config_for(&cli, run)?;
            let out = run_calibration(&cfg)?;
            stage("write", write_calibration(&cfg, &out, *display_scale))?;
            print_summary(&out);
            Ok(0)
        }
        Command::Check { kernel, tol, n_steps, horizon } => cmd_check(kernel, *tol, *n_steps, *horizon),
        Command::Predict { kernel, events, p0, horizon, output } => {
            let out = output.clone().unwrap_or_else(|| {
                cli.output_dir.clone().unwrap_or_else(|| PathBuf::from(".")).join("predictions.csv")
            });
            cmd_predict(kernel, events.as_deref(), p0, *horizon, &out)
        }
        Command::Demo { days, horizon, tau_max } => {
            let dir = cli.output_dir.clone().unwrap_or_else(|| PathBuf::from("demo"));
            cmd_demo(&dir, cli.seed.unwrap_or(7), *days, *horizon, *tau_max)
        }
    }
}

fn config_for(cli: &Cli, a: &RunArgs) -> StageResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => stage("config", RunConfig::load(p))?,
        None => RunConfig::default(),
    };
    if let Some(s) = &a.spec {
        cfg.spec = Some(s.clone());
        cfg.events.clear();
        cfg.prices.clear();
    }
    if !a.events.is_empty() {
        cfg.spec = None;
        cfg.events = a.events.clone();
        cfg.prices = a.prices.clone();
    }
    if let Some(v) = a.bin_width {
        cfg.bin_width = v;
    }
    if let Some(v) = a.tau_max {
        cfg.tau_max = v;
    }
    if let Some(v) = a.horizon {
        cfg.horizon = v;
    }
    if let Some(v) = a.days {
        cfg.days = v;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = &cli.output_dir {
        cfg.output_dir = v.clone();
    }
    stage("config", cfg.validate())?;
    Ok(cfg)
}

/// Reads and validates a spec file; the validation report goes to standard error.
pub fn load_spec(path: &Path) -> Result<SpecFile> {
    let spec = io::read_spec(path)?;
    let report = validate_spec(&spec.hawkes);
    if !report.passed() {
        eprintln!("{}", serde_json::to_string_pretty(&report)?);
        return Err(Error::InvalidInput(format!("invalid spec {}: {}", path.display(), report.messages.join("; "))));
    }
    Ok(spec)
}

/// One simulated or loaded trading day.
pub struct Day {
    pub events: EventStream,
    pub prices: Option<PricePath>,
}

/// Simulates `cfg.days` days; day `k` uses seed `cfg.seed + k`.
pub fn simulate_days(spec: &SpecFile, cfg: &RunConfig) -> Result<Vec<Day>> {
    if cfg.horizon == 0.0 {
        warn!("horizon is 0: the simulated streams are empty");
    }
    let lambda = spec.price.as_ref().map(|p| io::rows_to_mat(&p.lambda)).transpose()?;
    (0..cfg.days)
        .map(|k| {
            let events = simulate(&spec.hawkes, cfg.horizon, cfg.seed.wrapping_add(k as u64))?;
            let prices = match (&spec.price, &lambda) {
                (Some(pm), Some(l)) => Some(simulate_prices(&spec.hawkes, &events, l, &pm.p0, pm.interval)?),
                _ => None,
            };
            Ok(Day { events, prices })
        })
        .collect()
}

fn load_days(cfg: &RunConfig) -> Result<(Vec<Day>, Option<SpecFile>)> {
    match &cfg.spec {
        Some(path) => {
            let spec = load_spec(path)?;
            Ok((simulate_days(&spec, cfg)?, Some(spec)))
        }
        None => {
            let days = cfg
                .events
                .iter()
                .zip(&cfg.prices)
                .map(|(e, p)| {
                    Ok(Day { events: io::read_events(e, None)?, prices: Some(io::read_prices(p)?) })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((days, None))
        }
    }
}

fn bin_days(days: &[Day], cfg: &RunConfig) -> Result<Vec<BinnedSeries>> {
    let opts = BinOptions { trim_start: cfg.trim_start, trim_end: cfg.trim_end };
    days.iter()
        .enumerate()
        .map(|(k, day)| {
            let prices = day.prices.as_ref().ok_or_else(|| {
                Error::InvalidInput("prices are required: add a [price] section to the spec".into())
            })?;
            let mut s = bin(&day.events, prices, cfg.bin_width, opts)?;
            s.day = k;
            Ok(s)
        })
        .collect()
}

fn cmd_simulate(cfg: &RunConfig) -> Outcome {
    let path = cfg
        .spec
        .as_ref()
        .ok_or_else(|| StageError { stage: "simulate", source: Error::Config("simulate needs a spec".into()) })?;
    let spec = stage("spec", load_spec(path))?;
    let days = stage("simulate", simulate_days(&spec, cfg))?;
    stage("write", write_days(&cfg.output_dir, &days))?;
    let n: usize = days.iter().map(|d| d.events.events.len()).sum();
    println!("simulated {} day(s), {n} events -> {}", days.len(), cfg.output_dir.display());
    Ok(0)
}

pub fn write_days(dir: &Path, days: &[Day]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (k, day) in days.iter().enumerate() {
        io::write_events(&dir.join(format!("events_day{k}.csv")), &day.events)?;
        if let Some(p) = &day.prices {
            io::write_prices(&dir.join(format!("prices_day{k}.csv")), p)?;
        }
    }
    Ok(())
}

/// Observables estimated from the configured input.
pub fn run_estimate(cfg: &RunConfig) -> StageResult<(ObservableSet, Option<SpecFile>)> {
    let (days, spec) = stage("load", load_days(cfg))?;
    let series = stage("bin", bin_days(&days, cfg))?;
    let obs = stage("estimate", ObservableSet::estimate(&series, cfg.tau_max, cfg.taper))?;
    Ok((obs, spec))
}

fn cmd_estimate(cfg: &RunConfig) -> Outcome {
    let (obs, _) = run_estimate(cfg)?;
    let dir = cfg.output_dir.join("observables");
    stage("write", io::write_observables(&dir, &obs))?;
    println!("observables from {} day(s), {} bins -> {}", obs.n_days, obs.n_bins, dir.display());
    Ok(0)
}

fn run_factorize(cfg: &RunConfig, obs: &ObservableSet) -> StageResult<SpectralFactor> {
    let t = &cfg.tolerances;
    stage("factorize", factorize(&obs.to_laurent(), t.sbr2, t.sbr2_max_iter, cfg.grid))
}

fn cmd_factorize(cfg: &RunConfig) -> Outcome {
    let (obs, _) = run_estimate(cfg)?;
    let f = run_factorize(cfg, &obs)?;
    stage("write", io::write_observables(&cfg.output_dir.join("observables"), &obs))?;
    stage("write", io::write_factor(&cfg.output_dir.join("factor"), &f))?;
    println!(
        "factor residual {:.3e}, off-diagonal mass {:.3e}, {} SBR2 iterations",
        f.residual, f.offdiag_mass, f.sbr2_iterations
    );
    Ok(0)
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorSummary {
    pub residual: f64,
    pub offdiag_mass: f64,
    pub paraunitary_residual: f64,
    pub max_root: f64,
    pub outer_residual: f64,
    pub outer_iterations: usize,
    pub sbr2_iterations: usize,
    pub inverse_truncation: usize,
    pub inverse_max_pole: f64,
    pub inverse_tail_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub config: RunConfig,
    pub n_days: usize,
    pub n_bins: usize,
    /// `‖Ω(0) − diag(θv²)Δ·2‖/‖·‖` when the input is a Hawkes spec.
    pub omega_zero_gap: Option<f64>,
    pub factor: FactorSummary,
    pub k1: K1Diagnostics,
    pub k2: K2Report,
    /// Post-clip spectrum within `tolerances.clip` of PSD.
    pub k2_spectrum_ok: bool,
    pub admissibility_k1: AdmissibilityReport,
    pub admissibility_k2: AdmissibilityReport,
}

pub struct Calibration {
    pub observables: ObservableSet,
    pub factor: SpectralFactor,
    pub k1: ImpactKernel,
    pub k2: ImpactKernel,
    pub report: CalibrationReport,
}

/// estimate → SBR2 → assemble → invert → K¹ → K² → admissibility checks.
pub fn run_calibration(cfg: &RunConfig) -> StageResult<Calibration> {
    let (obs, spec) = run_estimate(cfg)?;
    calibrate_observables(cfg, obs, spec.as_ref().map(|s| &s.hawkes))
}

pub fn calibrate_observables(
    cfg: &RunConfig,
    obs: ObservableSet,
    spec: Option<&HawkesSpec>,
) -> StageResult<Calibration> {
    let tol = &cfg.tolerances;
    let gap = match spec {
        Some(s) => Some(omega_zero_gap(&obs, &stage("estimate", hawkes::stationary_intensity(s))?, &s.sizes)),
        None => None,
    };
    let factor = run_factorize(cfg, &obs)?;
    let inv = stage("invert", invert_factor(&factor))?;
    let (k1, k1_diag) = stage("build_k1", build_k1(&obs, &factor, cfg.grid, tol.tail))?;
    let (k2, k2_report) = stage("regularize_k2", regularize_k2(&k1))?;
    let admissibility_k1 = stage("nsa_check", nsa_check(&k1, tol.nsa))?;
    let admissibility_k2 = stage("nsa_check", nsa_check(&k2, tol.nsa))?;
    let k2_spectrum_ok = admissibility_k2.min_eig >= -tol.clip * admissibility_k2.spectral_scale;
    let report = CalibrationReport {
        config: cfg.clone(),
        n_days: obs.n_days,
        n_bins: obs.n_bins,
        omega_zero_gap: gap,
        factor: FactorSummary {
            residual: factor.residual,
            offdiag_mass: factor.offdiag_mass,
            paraunitary_residual: factor.paraunitary_residual,
            max_root: factor.max_root,
            outer_residual: factor.outer_residual,
            outer_iterations: factor.outer_iterations,
            sbr2_iterations: factor.sbr2_iterations,
            inverse_truncation: inv.n_trunc,
            inverse_max_pole: inv.max_pole,
            inverse_tail_bound: inv.tail_bound,
        },
        k1: k1_diag,
        k2: k2_report,
        k2_spectrum_ok,
        admissibility_k1,
        admissibility_k2,
    };
    Ok(Calibration { observables: obs, factor, k1, k2, report })
}

fn kernel_diagnostics(pairs: &[(&str, serde_json::Value)]) -> BTreeMap<String, serde_json::Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Writes observables, factor, both kernels, plot-ready curves and `report.json`.
pub fn write_calibration(cfg: &RunConfig, c: &Calibration, display_scale: Option<f64>) -> Result<()> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    io::write_observables(&dir.join("observables"), &c.observables)?;
    io::write_factor(&dir.join("factor"), &c.factor)?;
    let r = &c.report;
    let d1 = kernel_diagnostics(&[
        ("factor", serde_json::to_value(&r.factor)?),
        ("k1", serde_json::to_value(&r.k1)?),
        ("admissibility", serde_json::to_value(&r.admissibility_k1)?),
        ("tolerances", serde_json::to_value(&cfg.tolerances)?),
    ]);
    let d2 = kernel_diagnostics(&[
        ("factor", serde_json::to_value(&r.factor)?),
        ("k2", serde_json::to_value(&r.k2)?),
        ("admissibility", serde_json::to_value(&r.admissibility_k2)?),
        ("tolerances", serde_json::to_value(&cfg.tolerances)?),
    ]);
    io::write_kernel(&dir.join("k1"), &c.k1, d1.clone(), 1.0)?;
    io::write_kernel(&dir.join("k2"), &c.k2, d2.clone(), 1.0)?;
    if let Some(s) = display_scale {
        io::write_kernel(&dir.join("k1_scaled"), &c.k1, d1, s)?;
        io::write_kernel(&dir.join("k2_scaled"), &c.k2, d2, s)?;
    }
    write_curves(&dir.join("kernel_curves.csv"), &[&c.k1, &c.k2])?;
    io::write_report(&dir.join("report.json"), r)
}

/// Long-format `time,provenance,i,j,value` series of kernel entries.
pub fn write_curves(path: &Path, kernels: &[&ImpactKernel]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time", "provenance", "i", "j", "value"])?;
    for k in kernels {
        let prov = serde_json::to_value(k.provenance)?;
        let prov = prov.as_str().unwrap_or_default().to_string();
        for (t, m) in k.values.iter().enumerate() {
            let time = (t as f64 * k.delta).to_string();
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    w.write_record([time.clone(), prov.clone(), i.to_string(), j.to_string(), m[(i, j)].to_string()])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn print_summary(c: &Calibration) {
    let r = &c.report;
    println!(
        "factor residual {:.3e} (off-diagonal {:.3e}); K1 {} (min eig {:.3e}); K2 {} (min eig {:.3e})",
        r.factor.residual,
        r.factor.offdiag_mass,
        r.admissibility_k1.label,
        r.admissibility_k1.min_eig,
        r.admissibility_k2.label,
        r.admissibility_k2.min_eig
    );
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub admissibility: AdmissibilityReport,
    pub n_steps: usize,
    pub horizon: f64,
    pub roundtrip_value: f64,
    pub roundtrip_min_eig: f64,
    pub gram_norm: f64,
    pub arbitrage: bool,
}

pub fn check_kernel(k: &ImpactKernel, tol: f64, n_steps: usize, horizon: f64) -> Result<(CheckReport, RoundTripResult)> {
    let admissibility = nsa_check(k, tol)?;
    let rt = min_roundtrip_cost(k, n_steps, horizon)?;
    let report = CheckReport {
        admissibility,
        n_steps,
        horizon,
        roundtrip_value: rt.value,
        roundtrip_min_eig: rt.min_eig,
        gram_norm: rt.gram_norm,
        arbitrage: rt.arbitrage,
    };
    Ok((report, rt))
}

fn cmd_check(dir: &Path, tol: f64, n_steps: usize, horizon: Option<f64>) -> Outcome {
    if !(tol > 0.0) {
        return Err(StageError { stage: "check", source: Error::Config("tol must be positive".into()) });
    }
    let k = stage("read_kernel", io::read_kernel(dir))?;
    let horizon = horizon.unwrap_or(10.0 * k.delta);
    let (report, _) = stage("check", check_kernel(&k, tol, n_steps, horizon))?;
    println!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
    Ok(if report.admissibility.verdict { 0 } else { 1 })
}

fn cmd_predict(dir: &Path, events: Option<&Path>, p0: &[f64], horizon: Option<f64>, out: &Path) -> Outcome {
    let k = stage("read_kernel", io::read_kernel(dir))?;
    let d = k.d();
    let p0 = if p0.is_empty() { vec![0.0; d] } else { p0.to_vec() };
    let stream = match events {
        Some(p) => stage("read_events", io::read_events(p, horizon))?,
        None => EventStream { events: Vec::new(), horizon: horizon.unwrap_or(10.0 * k.delta) },
    };
    let flows = stage("bin", bin_flows(&stream, d, k.delta))?;
    let path = stage("predict", predict_prices(&k, &flows, &p0, false))?;
    if let Some(parent) = out.parent() {
        stage("write", fs::create_dir_all(parent).map_err(Error::from))?;
    }
    stage("write", io::write_predictions(out, 0.0, k.delta, &path))?;
    println!("{} predicted cross-sections -> {}", path.len(), out.display());
    Ok(0)
}

/// Two assets, the first ten times more active, with slow self-excitation and
/// mild cross-excitation; prices move through a correlated permanent impact.
pub fn demo_spec() -> SpecFile {
    let mut h = HawkesSpec::poisson(vec![1.0, 0.1], vec![1.0, 1.0]);
    let own = || vec![ExpTerm::new(0.3 * 2.0, 2.0), ExpTerm::new(0.4 * 0.05, 0.05)];
    let cross = || vec![ExpTerm::new(0.1 * 0.5, 0.5)];
    let block = vec![vec![own(), cross()], vec![cross(), own()]];
    h.phi.aa = block.clone();
    h.phi.bb = block;
    SpecFile {
        hawkes: h,
        price: Some(PriceModel {
            lambda: vec![vec![0.02, 0.015], vec![0.015, 0.05]],
            p0: vec![100.0, 100.0],
            interval: 1.0,
        }),
    }
}

fn cmd_demo(dir: &Path, seed: u64, days: usize, horizon: f64, tau_max: usize) -> Outcome {
    let started = std::time::Instant::now();
    stage("write", fs::create_dir_all(dir).map_err(Error::from))?;
    let spec = demo_spec();
    let spec_path = dir.join("spec.toml");
    stage("write", io::write_spec(&spec_path, &spec))?;
    let cfg = RunConfig {
        spec: Some(PathBuf::from("spec.toml")),
        horizon,
        days,
        seed,
        tau_max,
        trim_start: 100.0,
        output_dir: PathBuf::from("."),
        ..Default::default()
    };
    let cfg_path = dir.join("config.toml");
    stage("write", cfg.to_toml().and_then(|t| fs::write(&cfg_path, t).map_err(Error::from)))?;
    let cfg = stage("config", RunConfig::load(&cfg_path))?;
    stage("config", cfg.validate())?;

    let days = stage("simulate", simulate_days(&spec, &cfg))?;
    info!("simulated {} events", days.iter().map(|d| d.events.events.len()).sum::<usize>());
    let series = stage("bin", bin_days(&days, &cfg))?;
    let obs = stage("estimate", ObservableSet::estimate(&series, cfg.tau_max, cfg.taper))?;
    let cal = calibrate_observables(&cfg, obs, Some(&spec.hawkes))?;
    stage("write", write_calibration(&cfg, &cal, Some(1e4)))?;

    let mut checks = BTreeMap::new();
    for (name, k) in [("k1", &cal.k1), ("k2", &cal.k2)] {
        let (report, rt) = stage("check", check_kernel(k, cfg.tolerances.nsa, 8, 10.0 * k.delta))?;
        stage("write", io::write_strategy(&dir.join(format!("{name}_roundtrip.csv")), &rt.witness))?;
        checks.insert(name, report);
    }
    stage("write", io::write_report(&dir.join("checks.json"), &checks))?;

    // realized against predicted prices on the first day
    if let (Some(s), Some(p)) = (series.first(), days.first().and_then(|x| x.prices.as_ref())) {
        let p0 = &s.open[0];
        for (name, k) in [("k1", &cal.k1), ("k2", &cal.k2)] {
            let path = stage("predict", predict_prices(k, s, p0, false))?;
            let t0 = (cfg.trim_start / s.delta).ceil() * s.delta;
            stage("write", io::write_predictions(&dir.join(format!("predicted_{name}.csv")), t0, s.delta, &path))?;
        }
        stage("write", io::write_prices(&dir.join("realized_day0.csv"), p))?;
    }
    print_summary(&cal);
    println!("demo finished in {:.1} s -> {}", started.elapsed().as_secs_f64(), dir.display());
    Ok(0)
}
