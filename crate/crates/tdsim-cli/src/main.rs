//! Scenario runner for the tracking-differentiator control library.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{ArgGroup, Parser, Subcommand};

use commands::{CliError, Source};

#[derive(Parser)]
#[command(
    name = "tdsim",
    version,
    about = "Simulates tracking-differentiator based control loops"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trajectory and metrics files.
    #[command(group = ArgGroup::new("source").required(true).args(["preset", "config"]))]
    Run {
        /// Built-in scenario name.
        #[arg(long)]
        preset: Option<String>,
        /// Path to a scenario TOML file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run two presets and tabulate their indices side by side.
    Compare {
        preset_a: String,
        preset_b: String,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Sweep the linearized derivative-channel magnitude over a frequency
    /// band and report slopes.
    #[command(group = ArgGroup::new("source").required(true).args(["preset", "config"]))]
    Analyze {
        /// Built-in scenario name.
        #[arg(long)]
        preset: Option<String>,
        /// Path to a scenario TOML file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Lower edge of the sweep in rad/s.
        #[arg(long, default_value_t = 0.01)]
        omega_min: f64,
        /// Upper edge of the sweep in rad/s.
        #[arg(long, default_value_t = 1e5)]
        omega_max: f64,
        /// Number of logarithmically spaced points.
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print a built-in scenario as a TOML document.
    ShowPreset { name: String },
}

fn source_from(preset: Option<String>, config: Option<PathBuf>) -> Source {
    match (preset, config) {
        (Some(name), None) => Source::Preset(name),
        (None, Some(path)) => Source::File(path),
        // The argument group guarantees exactly one side is present.
        _ => unreachable!("argument group enforces one source"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    let outcome = match cli.command {
        Command::Run { preset, config, out } => {
            commands::cmd_run(&source_from(preset, config), &out)
        }
        Command::Compare {
            preset_a,
            preset_b,
            out,
        } => commands::cmd_compare(&preset_a, &preset_b, &out),
        Command::Analyze {
            preset,
            config,
            omega_min,
            omega_max,
            points,
            out,
        } => commands::cmd_analyze(
            &source_from(preset, config),
            omega_min,
            omega_max,
            points,
            &out,
        ),
        Command::ShowPreset { name } => commands::cmd_show_preset(&name),
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                CliError::Sim(_) => ExitCode::from(2),
                CliError::Config(_) | CliError::Io(_) => ExitCode::from(1),
            }
        }
    }
}
