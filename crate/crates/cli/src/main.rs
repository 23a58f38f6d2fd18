//! rbcom: resonant-beam communication channel calculator.
//!
//! Subcommands map one-to-one onto the library: link loss, threshold and
//! stable power, the joint capacity search, parameter sweeps, and the
//! frame-level simulator. Results are CSV (stdout or `--out <path>`) plus
//! a one-line summary on the other stream.
//!
//! Exit codes: 0 on success, 1 for configuration or feasibility errors,
//! 2 for numerical failures (a solver could not certify its result).

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};

use crate::commands::{Output, SweepVar};
use crate::config::RunConfig;

/// CLI failure, classified for the exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config file, or physically infeasible parameters.
    Config(String),
    /// A numerical routine failed to certify its result.
    Numerical(rbcom_core::Error),
    /// The output file could not be written.
    Io(std::io::Error),
}

impl CliError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(e) => write!(f, "output error: {e}"),
        }
    }
}

impl From<rbcom_core::Error> for CliError {
    fn from(e: rbcom_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "rbcom",
    version,
    about = "Resonant-beam communication channel calculator",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Configuration source and overrides shared by every subcommand.
///
/// Values resolve in three layers: built-in defaults (the reference
/// configuration), then the `--config` file, then these flags.
#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Flat `key = value` configuration file; absent keys keep defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<String>,
    /// Write the CSV here; the one-line summary then goes to stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<String>,
    /// Beam wavelength, m.
    #[arg(long, value_name = "M")]
    lambda: Option<f64>,
    /// Beam divergence half-angle, rad.
    #[arg(long, value_name = "RAD")]
    phi: Option<f64>,
    /// Transmitter-receiver distance, m.
    #[arg(long = "L", value_name = "M")]
    distance: Option<f64>,
    /// Gain-medium and receiver radius, m.
    #[arg(long, value_name = "M")]
    r0: Option<f64>,
    /// Saturation intensity of the gain medium, W/m².
    #[arg(long = "I_s", value_name = "W_PER_M2")]
    i_s: Option<f64>,
    /// Pumping efficiency (0, 1].
    #[arg(long, value_name = "RATIO")]
    eta: Option<f64>,
    /// Pumping power, W.
    #[arg(long = "P_in", value_name = "W")]
    p_in: Option<f64>,
    /// Channel bandwidth, Hz.
    #[arg(long = "B", value_name = "HZ")]
    bandwidth: Option<f64>,
    /// Noise power spectral density, dBm/Hz.
    #[arg(long = "N_0", value_name = "DBM_PER_HZ")]
    n_0: Option<f64>,
    /// Photodetector power rating, dBm.
    #[arg(long = "P_r_max", value_name = "DBM")]
    p_r_max: Option<f64>,
    /// Power splitting ratio for the single-point commands.
    #[arg(long, value_name = "RATIO")]
    alpha: Option<f64>,
    /// Search grid steps over the splitting ratio.
    #[arg(long = "K1", value_name = "N")]
    k1: Option<u32>,
    /// Search grid steps over the keying amplitude.
    #[arg(long = "K2", value_name = "N")]
    k2: Option<u32>,
}

/// Simulation controls for `simulate` and `mi-check`.
#[derive(Args, Debug, Default)]
struct SimArgs {
    /// Frames to simulate.
    #[arg(long, value_name = "N")]
    frames: Option<u64>,
    /// Seed of the trace generator.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Data slots per frame.
    #[arg(long, value_name = "N")]
    slots: Option<u32>,
    /// Constellation size; 0 derives it from the optimized peak power.
    #[arg(long, value_name = "N")]
    m_points: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One-way diffraction transmittance of the configured geometry.
    LinkLoss {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Threshold pumping power below which the cavity cannot resonate.
    Threshold {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Stable circulating power at the configured splitting ratio.
    StablePower {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Joint grid search over splitting ratio and keying amplitude.
    Optimize {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sweep one variable and emit selected quantities per grid point.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Variable to sweep.
        #[arg(long, value_enum)]
        var: SweepVar,
        /// First grid value.
        #[arg(long)]
        from: f64,
        /// Last grid value.
        #[arg(long)]
        to: f64,
        /// Number of grid points (at least 2).
        #[arg(long)]
        count: u32,
        /// Space the grid geometrically instead of linearly.
        #[arg(long)]
        log: bool,
        /// Comma-separated quantities to emit per point
        /// (delta, pth, u, alpha, ppeak, cup, clow, ahat, astar, mu1, pt).
        #[arg(long, value_name = "TOKENS")]
        emit: String,
    },
    /// Frame-level Monte-Carlo run of the compensated echo channel at the
    /// configured optimum; emits the trace as CSV.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Empirical mutual information of a simulated trace against the
    /// capacity bounds.
    MiCheck {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
}

/// Merges defaults, the optional config file, and flag overrides.
fn build_config(common: &CommonArgs, sim: Option<&SimArgs>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        cfg.apply_file(path)?;
    }
    if let Some(v) = common.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = common.phi {
        cfg.phi = v;
    }
    if let Some(v) = common.distance {
        cfg.distance = v;
    }
    if let Some(v) = common.r0 {
        cfg.r0 = v;
    }
    if let Some(v) = common.i_s {
        cfg.i_s = v;
    }
    if let Some(v) = common.eta {
        cfg.eta = v;
    }
    if let Some(v) = common.p_in {
        cfg.p_in = v;
    }
    if let Some(v) = common.bandwidth {
        cfg.bandwidth = v;
    }
    if let Some(v) = common.n_0 {
        cfg.n_0_dbm_hz = v;
    }
    if let Some(v) = common.p_r_max {
        cfg.p_r_max_dbm = v;
    }
    if let Some(v) = common.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = common.k1 {
        cfg.k1 = v;
    }
    if let Some(v) = common.k2 {
        cfg.k2 = v;
    }
    if let Some(sim) = sim {
        if let Some(v) = sim.frames {
            cfg.frames = v;
        }
        if let Some(v) = sim.seed {
            cfg.seed = v;
        }
        if let Some(v) = sim.slots {
            cfg.slots = v;
        }
        if let Some(v) = sim.m_points {
            cfg.m_points = v;
        }
    }
    Ok(cfg)
}

/// Applies the RBCOM_THREADS cap to the worker pool.
#[cfg(feature = "parallel")]
fn init_thread_pool() -> Result<(), CliError> {
    match std::env::var("RBCOM_THREADS") {
        Err(_) => Ok(()),
        Ok(raw) => {
            let n: usize = raw.parse().map_err(|_| {
                CliError::Config(format!(
                    "RBCOM_THREADS = `{raw}` is not a positive integer"
                ))
            })?;
            if n == 0 {
                return Err(CliError::Config(
                    "RBCOM_THREADS must be at least 1".into(),
                ));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn init_thread_pool() -> Result<(), CliError> {
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_thread_pool()?;
    let (output, out_path) = match &cli.command {
        Command::LinkLoss { common } => {
            (commands::link_loss(&build_config(common, None)?)?, common.out.clone())
        }
        Command::Threshold { common } => {
            (commands::threshold(&build_config(common, None)?)?, common.out.clone())
        }
        Command::StablePower { common } => {
            (commands::stable(&build_config(common, None)?)?, common.out.clone())
        }
        Command::Optimize { common } => {
            (commands::optimize_cmd(&build_config(common, None)?)?, common.out.clone())
        }
        Command::Sweep { common, var, from, to, count, log, emit } => {
            let cfg = build_config(common, None)?;
            (commands::sweep(&cfg, *var, *from, *to, *count, *log, emit)?, common.out.clone())
        }
        Command::Simulate { common, sim } => {
            (commands::simulate_cmd(&build_config(common, Some(sim))?)?, common.out.clone())
        }
        Command::MiCheck { common, sim } => {
            (commands::mi_check(&build_config(common, Some(sim))?)?, common.out.clone())
        }
    };
    emit_output(output, out_path.as_deref())
}

/// Routes the CSV and summary: CSV to stdout with the summary on stderr,
/// or CSV to `--out` with the summary on stdout.
fn emit_output(output: Output, out_path: Option<&str>) -> Result<(), CliError> {
    match out_path {
        Some(path) => {
            std::fs::write(path, &output.csv)?;
            println!("{}", output.summary);
        }
        None => {
            print!("{}", output.csv);
            eprintln!("{}", output.summary);
        }
    }
    Ok(())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else is
            // a configuration error.
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("rbcom: {e}");
        std::process::exit(e.exit_code());
    }
}
