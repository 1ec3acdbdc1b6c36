//! `ffpr` command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 run failure.
//! `FFPR_WORKERS` sets the worker-pool size.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ffpr_core::crystal::{generate_dataset, CrystalGeometry};
use ffpr_core::formats::{load_cimg, load_rmap, save_cimg};
use ffpr_core::{ComplexImage, MagnitudeMap, Model};

use crate::config::{Config, ExperimentId};
use crate::experiments::run_experiment;
use crate::methods::{run_method, Method, RunBudget, RunOutput};
use crate::metrics::{evaluate, write_rows, MetricsRow, TimingRow};
use crate::render::save_reconstruction_panels;

pub const WORKERS_ENV: &str = "FFPR_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "ffpr", version, about = "Phase retrieval solvers and desk-scale experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a simulated crystal dataset.
    Simulate(SimulateArgs),
    /// Run one solver on one observation.
    Solve(SolveArgs),
    /// Run an experiment and write its report.
    Experiment(ExperimentArgs),
    /// Recompute the metrics of a saved reconstruction.
    Evaluate(EvaluateArgs),
    /// Print the default configuration of an experiment.
    Config {
        #[arg(value_parser = parse_experiment)]
        experiment: ExperimentId,
    },
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "data")]
    out: PathBuf,
    #[arg(long, default_value = "test")]
    split: String,
    /// Object side length; the region keeps the default proportion.
    #[arg(long, default_value_t = 128)]
    grid: usize,
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` override (dotted keys), applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, value_parser = parse_method)]
    method: Method,
    /// Observed intensities (RMAP) on the canvas.
    #[arg(long, conflicts_with = "instance", required_unless_present = "instance")]
    input: Option<PathBuf>,
    /// Object file (CIMG); its far-field observation on a doubled canvas is solved.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Ground truth (CIMG) for the MSE columns, object- or canvas-sized.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "results/solve")]
    out: PathBuf,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Experiment id; otherwise taken from the config.
    #[arg(value_parser = parse_experiment)]
    experiment: Option<ExperimentId>,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Reconstruction (CIMG) on the canvas.
    #[arg(long)]
    recon: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    truth: Option<PathBuf>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    Method::parse(s).ok_or_else(|| {
        let names: Vec<_> = Method::ALL.iter().map(|m| m.as_str()).collect();
        format!("unknown method `{s}` (expected one of {})", names.join(", "))
    })
}

fn parse_experiment(s: &str) -> std::result::Result<ExperimentId, String> {
    ExperimentId::parse(s).ok_or_else(|| format!("unknown experiment `{s}`"))
}

/// A usage problem detected after argument parsing.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match init_workers().and_then(|()| dispatch(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                1
            } else {
                2
            }
        }
    }
}

fn init_workers() -> Result<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return usage(format!("{WORKERS_ENV} must be a positive integer, got `{raw}`")),
    };
    // a pool may already exist when the CLI runs in-process more than once
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn load_config(args: &ConfigArgs, extra: &[String], fallback: ExperimentId) -> Result<Config> {
    let mut sets = args.set.clone();
    sets.extend_from_slice(extra);
    Config::load(args.config.as_deref(), &sets, fallback).map_err(|e| Usage(format!("{e:#}")).into())
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Solve(a) => solve(a),
        Command::Experiment(a) => experiment(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Config { experiment } => {
            print!("{}", Config::default_toml(experiment));
            Ok(())
        }
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    if a.n == 0 {
        return usage("--n must be at least 1");
    }
    if a.grid < 4 {
        return usage("--grid must be at least 4");
    }
    let geometry = if a.grid == 128 {
        CrystalGeometry::default()
    } else {
        CrystalGeometry::scaled(a.grid)
    };
    let rows = generate_dataset(a.n, &a.out, &a.split, a.seed, geometry, [1.0, 0.0])?;
    println!("wrote {} instances to {}", rows.len(), a.out.join(&a.split).display());
    Ok(())
}

/// Pads an object-sized truth to the canvas.
fn truth_on_canvas(t: ComplexImage, canvas: (usize, usize)) -> Result<ComplexImage> {
    if t.shape() == canvas {
        return Ok(t);
    }
    if t.rows() > canvas.0 || t.cols() > canvas.1 {
        bail!("ground truth {:?} is larger than the canvas {:?}", t.shape(), canvas);
    }
    Ok(t.zero_pad(canvas.0, canvas.1)?)
}

fn solve(a: SolveArgs) -> Result<()> {
    let cfg = load_config(&a.cfg, &[], ExperimentId::SolveOne)?;
    let (y, mut truth): (MagnitudeMap, Option<ComplexImage>) = match (&a.input, &a.instance) {
        (Some(p), _) => (load_rmap(p).with_context(|| format!("reading {}", p.display()))?, None),
        (None, Some(p)) => {
            let x = load_cimg(p).with_context(|| format!("reading {}", p.display()))?;
            let canvas = (2 * x.rows(), 2 * x.cols());
            (Model::far(x.shape(), canvas)?.apply(&x)?, Some(x))
        }
        (None, None) => return usage("one of --input or --instance is required"),
    };
    if let Some(p) = &a.truth {
        truth = Some(load_cimg(p).with_context(|| format!("reading {}", p.display()))?);
    }
    let truth = truth.map(|t| truth_on_canvas(t, y.shape())).transpose()?;
    let out = run_method(a.method, &y, &cfg, a.seed, None, RunBudget::from_config(&cfg))?;
    fs::create_dir_all(&a.out)?;
    let name = a
        .instance
        .as_ref()
        .or(a.input.as_ref())
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let row = evaluate(
        &name,
        a.method.as_str(),
        a.seed,
        &out.estimate,
        &y,
        truth.as_ref(),
        out.iterations,
    )?;
    save_cimg(a.out.join("recon.cimg"), &out.estimate)?;
    write_trace(&a.out.join("trace.csv"), &out)?;
    write_rows(&a.out.join("metrics.csv"), std::slice::from_ref(&row))?;
    let timing = TimingRow {
        instance: row.instance.clone(),
        method: row.method.clone(),
        seed: row.seed,
        wall_ms: out.wall_ms,
    };
    write_rows(&a.out.join("timing.csv"), &[timing])?;
    save_reconstruction_panels(&a.out.join("panels.png"), &out.estimate, truth.as_ref())?;
    fs::write(a.out.join("config.toml"), cfg.to_toml())?;
    print_row(&row);
    Ok(())
}

/// `iteration,loss,time_ms`; the time column is empty when not recorded.
fn write_trace(path: &Path, out: &RunOutput) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "loss", "time_ms"])?;
    for (i, l) in out.losses.iter().enumerate() {
        let t = out.times_ms.get(i).map(|t| format!("{t:.3}")).unwrap_or_default();
        w.write_record([i.to_string(), format!("{l:e}"), t])?;
    }
    w.flush()?;
    Ok(())
}

fn print_row(row: &MetricsRow) {
    let opt = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_else(|| "-".into());
    println!(
        "{} {} seed={} loss={:e} mse={} mse_mag={} mse_phase={} iterations={}",
        row.instance,
        row.method,
        row.seed,
        row.final_loss,
        opt(row.mse_complex),
        opt(row.mse_magnitude),
        opt(row.mse_phase),
        row.iterations
    );
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let extra: Vec<String> = a
        .experiment
        .iter()
        .map(|e| format!("experiment={}", e.as_str()))
        .collect();
    let cfg = load_config(&a.cfg, &extra, ExperimentId::SolveOne)?;
    let report = run_experiment(&cfg)?;
    let mut methods: Vec<&str> = Vec::new();
    for r in &report.metrics {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    for m in methods {
        let losses = report.values(m, |r| Some(r.final_loss));
        let median_loss = crate::metrics::median(&losses).unwrap_or(f64::NAN);
        match report.median_mse(m) {
            Some(mse) => println!(
                "{m}: runs={} median_loss={median_loss:e} median_mse={mse:e}",
                losses.len()
            ),
            None => println!("{m}: runs={} median_loss={median_loss:e}", losses.len()),
        }
    }
    if !report.failures.is_empty() {
        eprintln!("{} run(s) failed; see failures.csv", report.failures.len());
    }
    println!("report written to {}", cfg.output.display());
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let x = load_cimg(&a.recon).with_context(|| format!("reading {}", a.recon.display()))?;
    let y = load_rmap(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    if x.shape() != y.shape() {
        bail!(
            "reconstruction {:?} and observation {:?} differ in shape",
            x.shape(),
            y.shape()
        );
    }
    let truth = match &a.truth {
        Some(p) => Some(truth_on_canvas(load_cimg(p)?, y.shape())?),
        None => None,
    };
    let name = a
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let row = evaluate(&name, "-", 0, &x, &y, truth.as_ref(), 0)?;
    let mut w = csv::Writer::from_writer(std::io::stdout());
    w.serialize(&row)?;
    w.flush()?;
    Ok(())
}
