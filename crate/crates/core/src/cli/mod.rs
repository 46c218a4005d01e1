//! Command-line front end: configuration, pipelines, CSV output and the
//! certification report.
//!
//! Exit codes: 0 on success, 1 on usage, configuration or input errors,
//! 3 when `--fail-on-separable` is set and entanglement is not certified.

pub mod certify_input;
pub mod config;
pub mod output;
pub mod pipelines;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use config::ExperimentConfig;
pub use output::CurveOutput;

use crate::dynamics::DynamicsError;
use crate::measure::MeasureError;
use crate::potential::PotentialError;
use crate::witness::{certify, certify_monte_carlo, CertificationResult, MonteCarloCheck, WitnessError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("input error: missing field `{0}`")]
    MissingField(String),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Witness(#[from] WitnessError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub const EXIT_ERROR: u8 = 1;
pub const EXIT_NOT_CERTIFIED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "tweezer-exchange", version, about = "Two-atom spin-exchange simulator and entanglement certification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON configuration; the built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Shots per grid point.
    #[arg(long)]
    pub shots: Option<usize>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Anti-aligned populations against exchange time.
    ExchangeScan(CommonArgs),
    /// Exchange frequency against trap depth.
    DepthSweep(CommonArgs),
    /// Parity against gradient time, contrast fit and certification.
    ParityScan {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        fail_on_separable: bool,
    },
    /// Parity against exchange time at fixed gradient time.
    ParityVsExchange(CommonArgs),
    /// Certify entanglement from a `key = value` measurement file.
    Certify {
        input: PathBuf,
        /// Resampling draws for the Monte Carlo cross-check (0 disables).
        #[arg(long, default_value_t = 0)]
        monte_carlo: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        fail_on_separable: bool,
    },
    /// Exchange frequency for the configured trap.
    Jex {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the trap depth (Hz).
        #[arg(long)]
        depth_hz: Option<f64>,
        /// Also solve the finite-difference model.
        #[arg(long)]
        numeric: bool,
    },
    /// Print the built-in configuration.
    DefaultConfig,
}

fn load_config(args: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::paper_defaults(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(shots) = args.shots {
        cfg.shots_per_point = shots;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes the curve to `--out` (summary to stdout) or to stdout (summary to
/// stderr).
fn emit<S: serde::Serialize>(args: &CommonArgs, curve: &CurveOutput, summary: &S) -> Result<(), CliError> {
    let summary = serde_json::to_string_pretty(summary).expect("summary serializes");
    match &args.out {
        Some(path) => {
            curve.write_csv(std::fs::File::create(path)?)?;
            println!("{summary}");
        }
        None => {
            curve.write_csv(std::io::stdout().lock())?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

/// Line-oriented `key = value` report.
pub fn format_certification(r: &CertificationResult, mc: Option<&MonteCarloCheck>) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("string write");
    kv("verdict", if r.entangled { "entangled".into() } else { "not certified".into() });
    kv("contrast", format!("{:.6}", r.contrast.value));
    kv("contrast_se", format!("{:.6}", r.contrast.sigma));
    kv("c_bound", format!("{:.6}", r.c_bound.value));
    kv("c_bound_se", format!("{:.6}", r.c_bound.sigma));
    kv("entangled", r.entangled.to_string());
    kv("sigma_separation", format!("{:.4}", r.sigma_separation));
    kv("fidelity", format!("{:.6}", r.fidelity.fidelity));
    kv("fidelity_se", format!("{:.6}", r.fidelity.sigma));
    kv("fidelity_witness", r.fidelity.entangled.to_string());
    if let Some(sc) = &r.success_corrected {
        kv("f_succ", format!("{:.6}", sc.f_succ.fidelity));
        kv("f_succ_se", format!("{:.6}", sc.f_succ.sigma));
        kv("f_succ_witness", sc.f_succ.entangled.to_string());
        kv("actual_fidelity_threshold", format!("{:.6}", sc.actual_threshold));
    }
    kv("concurrence_lower", format!("{:.6}", r.concurrence_lower));
    if let Some(mc) = mc {
        kv("mc_samples", mc.samples.to_string());
        kv("mc_separation", format!("{:.4}", mc.separation));
        kv("mc_separable_fraction", format!("{:.6}", mc.separable_fraction));
        kv("mc_margin_p00135", format!("{:.6}", mc.margin_p00135));
    }
    s
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::ExchangeScan(args) => {
            let cfg = load_config(&args)?;
            let out = pipelines::pipeline_exchange_scan(&cfg)?;
            emit(&args, &out.curve, &out)?;
        }
        Command::DepthSweep(args) => {
            let cfg = load_config(&args)?;
            let out = pipelines::pipeline_depth_sweep(&cfg)?;
            emit(&args, &out.curve, &out)?;
        }
        Command::ParityScan { common, fail_on_separable } => {
            let cfg = load_config(&common)?;
            let out = pipelines::pipeline_parity_scan(&cfg)?;
            emit(&common, &out.curve, &out)?;
            if fail_on_separable && !out.certification.entangled {
                return Ok(ExitCode::from(EXIT_NOT_CERTIFIED));
            }
        }
        Command::ParityVsExchange(args) => {
            let cfg = load_config(&args)?;
            let out = pipelines::pipeline_parity_vs_exchange(&cfg)?;
            emit(&args, &out.curve, &out)?;
        }
        Command::Certify { input, monte_carlo, seed, fail_on_separable } => {
            let text = std::fs::read_to_string(&input)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", input.display())))?;
            let inp = certify_input::parse_certification_input(&text)?;
            let result = certify(&inp)?;
            let mc = match monte_carlo {
                0 => None,
                n => Some(certify_monte_carlo(&inp, n, seed)?),
            };
            print!("{}", format_certification(&result, mc.as_ref()));
            if fail_on_separable && !result.entangled {
                return Ok(ExitCode::from(EXIT_NOT_CERTIFIED));
            }
        }
        Command::Jex { config, depth_hz, numeric } => {
            let cfg = match config {
                Some(path) => ExperimentConfig::load(&path)?,
                None => ExperimentConfig::paper_defaults(),
            };
            let r = pipelines::jex_report(&cfg, depth_hz, numeric)?;
            let mut out = std::io::stdout().lock();
            writeln!(out, "depth_hz = {}", r.depth_hz)?;
            writeln!(out, "radial_hz = {:.6}", r.radial_hz)?;
            writeln!(out, "axial_hz = {:.6}", r.axial_hz)?;
            writeln!(out, "depth_over_quantum = {:.6}", r.depth_over_quantum)?;
            writeln!(out, "u_eg_hz = {:.9}", r.u_eg_hz)?;
            writeln!(out, "j_ex_harmonic_hz = {:.9}", r.j_ex_harmonic_hz)?;
            if let Some(j) = r.j_ex_numeric_hz {
                writeln!(out, "j_ex_numeric_hz = {j:.9}")?;
            }
        }
        Command::DefaultConfig => println!("{}", ExperimentConfig::paper_defaults().to_json()),
    }
    Ok(ExitCode::SUCCESS)
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
