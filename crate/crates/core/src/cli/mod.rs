//! The `irs` command-line front end.
//!
//! Settings resolve in the order defaults, preset, `--config` file, flags;
//! later sources win. Every output file gets a `<file>.manifest` next to it
//! that replays the run through `--config`.
//!
//! Exit codes: 0 success, 2 usage error (unknown subcommand, flag or flag
//! value), 3 malformed config file, 4 filesystem failure, 5 invalid
//! parameters or a failed computation.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::experiments::Preset;
use crate::IrsError;
use commands::{ExperimentSettings, FitSettings, OptimizeSettings, SweepSettings};
use config::{flag, Settings};

pub use commands::manifest_path;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Run(#[from] IrsError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Io(_) => 4,
            CliError::Run(_) => 5,
        }
    }

    fn stdout(e: std::io::Error) -> Self {
        CliError::Io(format!("stdout: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(name = "irs", version, about = "IRS phase-shift modelling and beamforming simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reflection amplitude and phase of one element over a capacitance sweep.
    CircuitSweep(SweepArgs),
    /// Fit the amplitude-vs-phase model to a circuit sweep.
    FitModel(FitArgs),
    /// Optimize one channel realization and report its rate.
    Optimize(OptimizeArgs),
    /// Monte Carlo comparison of the beamforming schemes.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// key = value settings file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bottom-layer inductance (H)
    #[arg(long)]
    l1: Option<f64>,
    /// Top-layer inductance (H)
    #[arg(long)]
    l2: Option<f64>,
    /// Free-space impedance (ohm)
    #[arg(long)]
    z0: Option<f64>,
    /// Carrier frequency (Hz)
    #[arg(long)]
    freq: Option<f64>,
    /// Smallest capacitance (F)
    #[arg(long)]
    c_min: Option<f64>,
    /// Largest capacitance (F)
    #[arg(long)]
    c_max: Option<f64>,
    /// Capacitance samples per resistance
    #[arg(long)]
    points: Option<usize>,
    /// Comma-separated resistances (ohm)
    #[arg(long)]
    r_values: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SweepArgs {
    fn flags(&self) -> Vec<(&'static str, String)> {
        [
            flag("l1", self.l1),
            flag("l2", self.l2),
            flag("z0", self.z0),
            flag("freq", self.freq),
            flag("c_min", self.c_min),
            flag("c_max", self.c_max),
            flag("points", self.points),
            flag("r_values", self.r_values.as_ref()),
            flag("out", self.out.as_ref().map(|p| p.display())),
        ]
        .into_iter()
        .flatten()
        .collect()
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV written by circuit-sweep; the reference sweep is used when absent
    #[arg(long)]
    input: Option<PathBuf>,
    /// Fit only rows with this resistance
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SystemArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Transmit antennas
    #[arg(long)]
    m: Option<usize>,
    /// Reflecting elements
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    p_t_dbm: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    sigma2_dbm: Option<f64>,
    #[arg(long)]
    beta_min: Option<f64>,
    /// Model phase offset (rad)
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    /// AP-user horizontal distance (m)
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    ap_irs_distance: Option<f64>,
    #[arg(long)]
    vertical_offset: Option<f64>,
    #[arg(long)]
    ref_loss_db: Option<f64>,
    #[arg(long)]
    exp_ap_irs: Option<f64>,
    #[arg(long)]
    exp_irs_user: Option<f64>,
    #[arg(long)]
    exp_ap_user: Option<f64>,
    /// Relative objective change that stops the alternating optimization
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_outer_iters: Option<usize>,
    /// Grid size of the 1D element search
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    discrete_bits: Option<u32>,
    /// Search the whole circle instead of the trust region in 1D search
    #[arg(long)]
    full_circle: bool,
}

impl SystemArgs {
    fn flags(&self) -> Vec<(&'static str, String)> {
        [
            flag("seed", self.seed),
            flag("m", self.m),
            flag("n", self.n),
            flag("p_t_dbm", self.p_t_dbm),
            flag("sigma2_dbm", self.sigma2_dbm),
            flag("beta_min", self.beta_min),
            flag("phi", self.phi),
            flag("k", self.k),
            flag("d", self.d),
            flag("ap_irs_distance", self.ap_irs_distance),
            flag("vertical_offset", self.vertical_offset),
            flag("ref_loss_db", self.ref_loss_db),
            flag("exp_ap_irs", self.exp_ap_irs),
            flag("exp_irs_user", self.exp_irs_user),
            flag("exp_ap_user", self.exp_ap_user),
            flag("tol", self.tol),
            flag("max_outer_iters", self.max_outer_iters),
            flag("grid_points", self.grid_points),
            flag("discrete_bits", self.discrete_bits),
            self.full_circle.then(|| ("full_circle", "true".to_string())),
        ]
        .into_iter()
        .flatten()
        .collect()
    }
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Trial index selecting the channel realization
    #[arg(long)]
    trial: Option<u64>,
    /// Scheme label or number 1-5 (default practical_ao_quadratic)
    #[arg(long)]
    scheme: Option<String>,
    /// Element solver override: quadratic | 1d | discrete | align | auto
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the sampled channels to this CSV
    #[arg(long)]
    dump_channels: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// fig4 | fig5 | fig6
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated scheme labels or numbers 1-5
    #[arg(long)]
    schemes: Option<String>,
    /// d | n | b
    #[arg(long)]
    sweep: Option<String>,
    /// Comma-separated sweep points (distances, or element counts for sweep n)
    #[arg(long)]
    sweep_values: Option<String>,
    /// Comma-separated phase-shifter resolutions for sweep b
    #[arg(long)]
    bits: Option<String>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render an SVG chart to this path
    #[arg(long)]
    plot: Option<PathBuf>,
}

fn file_pairs(path: &Option<PathBuf>) -> Result<Vec<(String, String)>, CliError> {
    path.as_deref().map_or(Ok(Vec::new()), config::load)
}

fn resolve<S: Settings>(
    mut settings: S,
    subcommand: &str,
    file: &[(String, String)],
    flags: Vec<(&'static str, String)>,
) -> Result<S, CliError> {
    config::apply(&mut settings, subcommand, file, &flags)?;
    Ok(settings)
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::CircuitSweep(a) => {
            let file = file_pairs(&a.config)?;
            let s = resolve(SweepSettings::default(), "circuit-sweep", &file, a.flags())?;
            commands::circuit_sweep(&s, stdout)
        }
        Command::FitModel(a) => {
            let file = file_pairs(&a.config)?;
            let flags = [
                flag("input", a.input.as_ref().map(|p| p.display())),
                flag("r", a.r),
                flag("out", a.out.as_ref().map(|p| p.display())),
            ]
            .into_iter()
            .flatten()
            .collect();
            let s = resolve(FitSettings::default(), "fit-model", &file, flags)?;
            commands::fit_model(&s, stdout)
        }
        Command::Optimize(a) => {
            let file = file_pairs(&a.system.config)?;
            let mut flags = a.system.flags();
            flags.extend(
                [
                    flag("trial", a.trial),
                    flag("scheme", a.scheme.as_ref()),
                    flag("solver", a.solver.as_ref()),
                    flag("out", a.out.as_ref().map(|p| p.display())),
                    flag("dump_channels", a.dump_channels.as_ref().map(|p| p.display())),
                ]
                .into_iter()
                .flatten(),
            );
            let s = resolve(OptimizeSettings::default(), "optimize", &file, flags)?;
            commands::optimize(&s, stdout)
        }
        Command::Experiment(a) => {
            let file = file_pairs(&a.system.config)?;
            let preset = match &a.preset {
                Some(p) => Some(p.parse::<Preset>().map_err(|e| CliError::Usage(e.to_string()))?),
                None => match file.iter().rev().find(|(k, _)| k == "preset") {
                    Some((_, v)) if v == "none" => None,
                    Some((_, v)) => Some(v.parse::<Preset>().map_err(|e| CliError::Config(e.to_string()))?),
                    None => None,
                },
            };
            let mut flags = a.system.flags();
            flags.extend(
                [
                    flag("trials", a.trials),
                    flag("schemes", a.schemes.as_ref()),
                    flag("sweep", a.sweep.as_ref()),
                    flag("sweep_values", a.sweep_values.as_ref()),
                    flag("bits", a.bits.as_ref()),
                    flag("threads", a.threads),
                    flag("out", a.out.as_ref().map(|p| p.display())),
                    flag("plot", a.plot.as_ref().map(|p| p.display())),
                ]
                .into_iter()
                .flatten(),
            );
            let s = resolve(ExperimentSettings::new(preset), "experiment", &file, flags)?;
            commands::experiment(&s, stdout)
        }
    }
}

/// Parses `argv` (including the program name), runs the subcommand and returns the exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().ansi().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
