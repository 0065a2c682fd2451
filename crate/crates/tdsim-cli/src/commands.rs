//! The four subcommands, factored away from argument parsing so they can be
//! tested directly.

use std::path::{Path, PathBuf};

use thiserror::Error;

use tdsim::analysis::{bode_magnitude_db, fit_slope_db_per_decade, second_order_char};
use tdsim::differentiators::{TdKind, TdParams};
use tdsim::scenario::{preset, run_closed_loop, run_open_loop_td, RunResult, ScenarioConfig, PRESET_NAMES};
use tdsim::simcore::SimError;

use crate::config::{parse_config_str, to_config_str, Mode};
use crate::output::{atomic_write, compare_table, format_float, metrics_text, trajectory_csv};

pub const CSV_PRECISION_VAR: &str = "TDSIM_CSV_PRECISION";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Where a scenario comes from: a built-in preset or a TOML file.
pub enum Source {
    Preset(String),
    File(PathBuf),
}

struct Loaded {
    mode: Mode,
    config: ScenarioConfig,
    /// Base name for output files.
    name: String,
    /// Human-readable origin for provenance headers.
    describe: String,
}

fn unknown_preset(name: &str) -> CliError {
    CliError::Config(format!(
        "unknown preset \"{name}\"; available presets: {}",
        PRESET_NAMES.join(", ")
    ))
}

fn load(source: &Source) -> Result<Loaded, CliError> {
    let loaded = match source {
        Source::Preset(name) => {
            let config = preset(name).ok_or_else(|| unknown_preset(name))?;
            Loaded {
                mode: Mode::ClosedLoop,
                config,
                name: name.clone(),
                describe: format!("preset {name}"),
            }
        }
        Source::File(path) => {
            let text = std::fs::read_to_string(path)?;
            let (mode, config) = parse_config_str(&text).map_err(CliError::Config)?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".to_string());
            Loaded {
                mode,
                config,
                name,
                describe: format!("config {}", path.display()),
            }
        }
    };
    loaded
        .config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(loaded)
}

/// Reads the CSV precision override from the environment: unset means
/// shortest round-trip formatting, otherwise a digit count for scientific
/// notation.
pub fn csv_precision() -> Result<Option<usize>, CliError> {
    match std::env::var(CSV_PRECISION_VAR) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Config(format!("{CSV_PRECISION_VAR}: {e}"))),
        Ok(raw) => {
            let parsed: Option<usize> = raw.trim().parse().ok();
            match parsed {
                Some(n) if n <= 17 => Ok(Some(n)),
                _ => Err(CliError::Config(format!(
                    "{CSV_PRECISION_VAR} must be an integer between 0 and 17, got \"{raw}\""
                ))),
            }
        }
    }
}

fn execute(mode: Mode, config: &ScenarioConfig) -> Result<RunResult, CliError> {
    let result = match mode {
        Mode::ClosedLoop => run_closed_loop(config)?,
        Mode::OpenLoop => {
            let params = match config.td_kind {
                TdKind::Intd => TdParams::Intd(config.intd),
                TdKind::Han => TdParams::Han(config.han_td),
            };
            run_open_loop_td(
                config.td_kind,
                &params,
                &config.reference,
                &config.noise,
                config.horizon,
                &config.integrator,
                config.controller_dt,
            )?
        }
    };
    Ok(result)
}

fn write_bundle(
    out_dir: &Path,
    loaded: &Loaded,
    result: &RunResult,
    precision: Option<usize>,
) -> Result<(PathBuf, PathBuf), CliError> {
    std::fs::create_dir_all(out_dir)?;
    let traj_path = out_dir.join(format!("{}_trajectory.csv", loaded.name));
    let metrics_path = out_dir.join(format!("{}_metrics.txt", loaded.name));
    atomic_write(
        &traj_path,
        &trajectory_csv(result, loaded.mode, &loaded.describe, precision),
    )?;
    atomic_write(
        &metrics_path,
        &metrics_text(result, loaded.mode, &loaded.describe),
    )?;
    Ok((traj_path, metrics_path))
}

fn print_run_summary(loaded: &Loaded, result: &RunResult) {
    let m = &result.metrics;
    println!(
        "{} ({}): iae = {}, itae = {}, itse = {}, isu = {}, iau = {}",
        loaded.name,
        loaded.mode.name(),
        m.iae,
        m.itae,
        m.itse,
        m.isu,
        m.iau
    );
    if result.envelope_exceeded {
        eprintln!(
            "warning: plant state left the operating envelope during {}",
            loaded.name
        );
    }
}

pub fn cmd_run(source: &Source, out_dir: &Path) -> Result<(), CliError> {
    let loaded = load(source)?;
    let precision = csv_precision()?;
    let result = execute(loaded.mode, &loaded.config)?;
    let (traj_path, metrics_path) = write_bundle(out_dir, &loaded, &result, precision)?;
    print_run_summary(&loaded, &result);
    println!("wrote {}", traj_path.display());
    println!("wrote {}", metrics_path.display());
    Ok(())
}

pub fn cmd_compare(preset_a: &str, preset_b: &str, out_dir: &Path) -> Result<(), CliError> {
    let loaded_a = load(&Source::Preset(preset_a.to_string()))?;
    let loaded_b = load(&Source::Preset(preset_b.to_string()))?;
    let precision = csv_precision()?;

    let (result_a, result_b) = std::thread::scope(|scope| {
        let handle_a = scope.spawn(|| run_closed_loop(&loaded_a.config));
        let handle_b = scope.spawn(|| run_closed_loop(&loaded_b.config));
        (
            handle_a.join().expect("runner does not panic"),
            handle_b.join().expect("runner does not panic"),
        )
    });
    let result_a = result_a?;
    let result_b = result_b?;

    write_bundle(out_dir, &loaded_a, &result_a, precision)?;
    write_bundle(out_dir, &loaded_b, &result_b, precision)?;
    let table = compare_table(preset_a, &result_a.metrics, preset_b, &result_b.metrics);
    let table_path = out_dir.join(format!("{preset_a}_vs_{preset_b}_compare.txt"));
    atomic_write(&table_path, &table)?;
    print!("{table}");
    println!("wrote {}", table_path.display());
    if result_a.envelope_exceeded || result_b.envelope_exceeded {
        eprintln!("warning: plant state left the operating envelope");
    }
    Ok(())
}

pub fn cmd_analyze(
    source: &Source,
    omega_min: f64,
    omega_max: f64,
    points: usize,
    out_dir: &Path,
) -> Result<(), CliError> {
    if points < 2 {
        return Err(CliError::Config(format!(
            "points must be at least 2, got {points}"
        )));
    }
    if !(omega_min.is_finite() && omega_max.is_finite() && omega_min > 0.0 && omega_min < omega_max)
    {
        return Err(CliError::Config(format!(
            "need 0 < omega-min < omega-max, got {omega_min} and {omega_max}"
        )));
    }
    let loaded = load(source)?;
    let precision = csv_precision()?;
    let p = loaded.config.intd;
    let ch = second_order_char(&p);

    let ratio = omega_max / omega_min;
    let mut omegas = Vec::with_capacity(points);
    let mut mags = Vec::with_capacity(points);
    for i in 0..points {
        let omega = omega_min * ratio.powf(i as f64 / (points - 1) as f64);
        omegas.push(omega);
        mags.push(bode_magnitude_db(omega, &p));
    }

    let band = |lo: f64, hi: f64| {
        let mut ws = Vec::new();
        let mut ms = Vec::new();
        for (w, m) in omegas.iter().zip(&mags) {
            if *w >= lo && *w <= hi {
                ws.push(*w);
                ms.push(*m);
            }
        }
        fit_slope_db_per_decade(&ws, &ms)
    };
    let low_slope = band(ch.omega_n / 1000.0, ch.omega_n / 100.0);
    let high_slope = band(10.0 * ch.omega_n, 1000.0 * ch.omega_n);
    let slope_text = |s: Option<f64>| match s {
        Some(v) => format!("{v:.3}"),
        None => "n/a".to_string(),
    };

    std::fs::create_dir_all(out_dir)?;
    let mut csv = String::new();
    csv.push_str(&format!("# tdsim {}\n", env!("CARGO_PKG_VERSION")));
    csv.push_str(&format!("# source: {}\n", loaded.describe));
    csv.push_str(&format!(
        "# intd: alpha={} beta={} gamma={} r={}\n",
        p.alpha, p.beta, p.gamma, p.r
    ));
    csv.push_str(&format!(
        "# omega_n={} xi={} dc_gain={}\n",
        ch.omega_n, ch.xi, ch.dc_gain
    ));
    csv.push_str("omega,magnitude_db\n");
    for (w, m) in omegas.iter().zip(&mags) {
        csv.push_str(&format!(
            "{},{}\n",
            format_float(*w, precision),
            format_float(*m, precision)
        ));
    }
    let csv_path = out_dir.join(format!("{}_bode.csv", loaded.name));
    atomic_write(&csv_path, &csv)?;

    println!(
        "omega_n = {} rad/s, xi = {}, dc_gain = {}, slope below resonance = {} dB/decade, above = {} dB/decade",
        ch.omega_n,
        ch.xi,
        ch.dc_gain,
        slope_text(low_slope),
        slope_text(high_slope)
    );
    println!("wrote {}", csv_path.display());
    Ok(())
}

pub fn cmd_show_preset(name: &str) -> Result<(), CliError> {
    let config = preset(name).ok_or_else(|| unknown_preset(name))?;
    print!("{}", to_config_str(Mode::ClosedLoop, &config));
    Ok(())
}
