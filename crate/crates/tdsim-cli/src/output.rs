//! Rendering of run results to CSV and text reports, with provenance
//! headers and atomic file writes.

use std::io::Write as _;
use std::path::Path;

use tdsim::metrics::MetricsReport;
use tdsim::scenario::RunResult;
use tdsim::signals::NoiseDistribution;
use tdsim::simcore::Method;

use crate::config::{to_config_str, Mode};

/// FNV-1a over the canonical serialized config, so two runs can be compared
/// for configuration equality from their output files alone.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Writes via a temporary file in the same directory, so readers never see
/// a partial file.
pub fn atomic_write(path: &Path, content: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut file = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    file.write_all(content.as_bytes())?;
    file.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// One float, either in Rust's shortest round-trip form or with a fixed
/// number of significant digits in scientific notation.
pub fn format_float(v: f64, precision: Option<usize>) -> String {
    match precision {
        None => format!("{v}"),
        Some(n) => format!("{v:.n$e}"),
    }
}

fn noise_description(result: &RunResult) -> String {
    let noise = &result.provenance.config.noise;
    match noise.distribution {
        NoiseDistribution::None => "none".to_string(),
        NoiseDistribution::Uniform => format!(
            "uniform half_range={} sample_period={}",
            noise.half_range, noise.sample_period
        ),
    }
}

fn method_name(method: Method) -> &'static str {
    match method {
        Method::Rk4Fixed => "rk4_fixed",
        Method::Rk45Adaptive => "rk45_adaptive",
    }
}

/// Comment lines identifying what produced a file. Deliberately free of
/// timestamps: two runs of the same config produce byte-identical output.
pub fn provenance_header(result: &RunResult, mode: Mode, source: &str) -> String {
    let cfg = &result.provenance.config;
    let canonical = to_config_str(mode, cfg);
    let integ = &cfg.integrator;
    let mut out = String::new();
    out.push_str(&format!("# tdsim {}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&format!("# source: {source}\n"));
    out.push_str(&format!("# mode: {}\n", mode.name()));
    out.push_str(&format!(
        "# td_kind: {}\n",
        match cfg.td_kind {
            tdsim::differentiators::TdKind::Intd => "intd",
            tdsim::differentiators::TdKind::Han => "han",
        }
    ));
    out.push_str(&format!("# seed: {}\n", cfg.noise.seed));
    out.push_str(&format!("# noise: {}\n", noise_description(result)));
    out.push_str(&format!(
        "# integrator: {} dt={} rel_tol={} abs_tol={} max_dt={} min_dt={}\n",
        method_name(integ.method),
        integ.dt,
        integ.rel_tol,
        integ.abs_tol,
        integ.max_dt,
        integ.min_dt
    ));
    out.push_str(&format!(
        "# noise_generator: {}\n",
        result.provenance.noise_generator
    ));
    out.push_str(&format!(
        "# config_hash: fnv1a64:{:016x}\n",
        fnv1a64(canonical.as_bytes())
    ));
    out
}

/// The full trajectory file: provenance comments, a column header, one row
/// per sample. Open-loop results carry a trailing phase column.
pub fn trajectory_csv(result: &RunResult, mode: Mode, source: &str, precision: Option<usize>) -> String {
    let mut out = provenance_header(result, mode, source);
    out.push_str("t,r,y_clean,y_measured,u,z1,z2,x1,x2");
    if result.phase.is_some() {
        out.push_str(",phase");
    }
    out.push('\n');
    let f = |v: f64| format_float(v, precision);
    for i in 0..result.len() {
        let t = result.t0 + i as f64 * result.dt;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}",
            f(t),
            f(result.r[i]),
            f(result.y_clean[i]),
            f(result.y_measured[i]),
            f(result.u[i]),
            f(result.z1[i]),
            f(result.z2[i]),
            f(result.x1[i]),
            f(result.x2[i]),
        ));
        if let Some(phases) = &result.phase {
            out.push(',');
            out.push_str(phases[i].name());
        }
        out.push('\n');
    }
    out
}

fn metric_rows(m: &MetricsReport) -> [(&'static str, f64); 6] {
    [
        ("iae", m.iae),
        ("itae", m.itae),
        ("itse", m.itse),
        ("isu", m.isu),
        ("iau", m.iau),
        ("mse", m.mse),
    ]
}

/// The metrics report as `name = value` lines.
pub fn metrics_text(result: &RunResult, mode: Mode, source: &str) -> String {
    let mut out = provenance_header(result, mode, source);
    for (name, value) in metric_rows(&result.metrics) {
        out.push_str(&format!("{name} = {value}\n"));
    }
    out.push_str(&format!("horizon = {}\n", result.metrics.horizon));
    out
}

/// Side-by-side index table for two runs. Lower is better for every row, so
/// the winner column names the smaller side.
pub fn compare_table(
    name_a: &str,
    a: &MetricsReport,
    name_b: &str,
    b: &MetricsReport,
) -> String {
    let rows_a = metric_rows(a);
    let rows_b = metric_rows(b);
    let width_a = name_a.len().max(24);
    let width_b = name_b.len().max(24);
    let mut out = format!(
        "{:<8} {:>width_a$} {:>width_b$} {:<10}\n",
        "index", name_a, name_b, "winner"
    );
    for ((name, va), (_, vb)) in rows_a.iter().zip(&rows_b) {
        let winner = if va < vb {
            name_a
        } else if vb < va {
            name_b
        } else {
            "tie"
        };
        out.push_str(&format!(
            "{:<8} {:>width_a$} {:>width_b$} {:<10}\n",
            name,
            format!("{va}"),
            format!("{vb}"),
            winner
        ));
    }
    out
}
