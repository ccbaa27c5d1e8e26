//! Config-driven front end for the chiral single-photon transport
//! simulator: parameter derivation, isolation spectra, parameter sweeps,
//! wavepacket and emission runs, and field-map analysis, with
//! deterministic CSV/JSON outputs.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::DataFormat;

/// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
/// 4 incomplete run (residual above threshold; outputs still written).
pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_INCOMPLETE: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<chiralsim_core::Error> for CliError {
    fn from(e: chiralsim_core::Error) -> Self {
        use chiralsim_core::Error as E;
        match e {
            E::Singularity { .. } | E::NonFinite { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "chiralsim",
    version,
    about = "Chiral single-photon transport: isolation spectra, wavepacket \
             dynamics, unidirectional emission"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Data table format.
    #[arg(long, value_enum, default_value = "csv")]
    format: DataFormat,
    /// Re-run at doubled resolution and report observable shifts
    /// (wavepacket runs).
    #[arg(long)]
    check_grid: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve and print the system rates in every unit system.
    Derive(CommonArgs),
    /// Steady-state transmission spectrum and isolation metrics.
    Spectrum(CommonArgs),
    /// Time-domain single-photon wavepacket run.
    Wavepacket(CommonArgs),
    /// Emitter decay and port-resolved waveguide collection.
    Emission(CommonArgs),
    /// One-parameter sweep of an isolation metric.
    Sweep(CommonArgs),
    /// Chirality map and mode volume of a field-map file.
    FieldAnalyze(CommonArgs),
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("CHIRALSIM_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                // A failed build means a pool already exists; fine for tests.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Command::Derive(a) => ("derive", a),
        Command::Spectrum(a) => ("spectrum", a),
        Command::Wavepacket(a) => ("wavepacket", a),
        Command::Emission(a) => ("emission", a),
        Command::Sweep(a) => ("sweep", a),
        Command::FieldAnalyze(a) => ("field-analyze", a),
    };
    match run(name, args) {
        Ok(Completion::Clean) => ExitCode::from(EXIT_OK),
        Ok(Completion::Incomplete(msg)) => {
            eprintln!("warning: {msg}");
            ExitCode::from(EXIT_INCOMPLETE)
        }
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Config(_) => ExitCode::from(EXIT_CONFIG),
                CliError::Numerical(_) => ExitCode::from(EXIT_NUMERICAL),
            }
        }
    }
}

/// How a command finished: cleanly, or with data but a residual warning.
pub enum Completion {
    Clean,
    Incomplete(String),
}

fn run(name: &str, args: &CommonArgs) -> Result<Completion, CliError> {
    let cfg = config::RawConfig::load(&args.config)?;
    let out = config::output_config(&cfg, args.out.clone());
    let provenance = output::Provenance::new(&cfg.sha256_prefix);
    let ctx = commands::Context {
        cfg: &cfg,
        out_dir: out.dir,
        format: args.format,
        provenance,
        check_grid: args.check_grid,
    };
    match name {
        "derive" => commands::derive::run(&ctx),
        "spectrum" => commands::spectrum::run(&ctx),
        "wavepacket" => commands::wavepacket::run(&ctx),
        "emission" => commands::emission::run(&ctx),
        "sweep" => commands::sweep::run(&ctx),
        "field-analyze" => commands::field::run(&ctx),
        _ => unreachable!("unknown command {name}"),
    }
}
