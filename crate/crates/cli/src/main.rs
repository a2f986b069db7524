//! `omsim`: batch driver for the optomechanical simulation toolkit.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Semiclassical optomechanics simulations driven by a key = value config file.
#[derive(Debug, Parser)]
#[command(name = "omsim", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,

    /// Envelope integration step in seconds (same as `--override dt_s=<s>`).
    #[arg(long, global = true, value_name = "S")]
    pub dt: Option<String>,

    /// Replace a config value; may be repeated.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Also write downsampled series for plotting.
    #[arg(long, global = true)]
    pub plot_data: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Steady-state probe response swept over delta.
    Spectrum,
    /// Stability verdict and eigenvalues of the operating point.
    Stability,
    /// Single-cavity write/store/read simulation.
    Memory,
    /// Two-cavity transduction for the configured detuning case(s).
    Transduce,
    /// Repeat a protocol over `scan_values` of `scan_key`.
    Scan,
    /// Run the built-in oracle cross-checks.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Stability => "stability",
            Command::Memory => "memory",
            Command::Transduce => "transduce",
            Command::Scan => "scan",
            Command::Verify => "verify",
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).format_timestamp(None).init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.machine_line());
            ExitCode::from(failure.code)
        }
    }
}
