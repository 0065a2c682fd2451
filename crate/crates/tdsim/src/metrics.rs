//! Integral performance indices computed from uniformly sampled series by
//! the trapezoidal rule.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A uniformly sampled signal.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self, GridMismatch> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(GridMismatch {
                what: format!("sample period must be finite and positive, got {dt}"),
            });
        }
        if values.len() < 2 {
            return Err(GridMismatch {
                what: format!("need at least two samples, got {}", values.len()),
            });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(GridMismatch {
                what: format!("non-finite sample {bad}"),
            });
        }
        Ok(Self { t0, dt, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Two series were combined that do not share a sampling grid.
#[derive(Debug, Error)]
#[error("series grids do not match: {what}")]
pub struct GridMismatch {
    pub what: String,
}

/// All indices for one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub iae: f64,
    pub itae: f64,
    pub itse: f64,
    pub isu: f64,
    pub iau: f64,
    pub mse: f64,
    pub horizon: f64,
}

// Series are always built on the same grid by the scenario runner, so exact
// equality is the right check; any drift is a bug upstream.
fn check_aligned(a: &TimeSeries, b: &TimeSeries) -> Result<(), GridMismatch> {
    if a.t0 != b.t0 || a.dt != b.dt || a.len() != b.len() {
        return Err(GridMismatch {
            what: format!(
                "t0 {} vs {}, dt {} vs {}, len {} vs {}",
                a.t0,
                b.t0,
                a.dt,
                b.dt,
                a.len(),
                b.len()
            ),
        });
    }
    Ok(())
}

fn trapz(dt: f64, f: impl Fn(usize) -> f64, n: usize) -> f64 {
    let mut acc = 0.5 * (f(0) + f(n - 1));
    for i in 1..n - 1 {
        acc += f(i);
    }
    acc * dt
}

/// Integral of |r - y|.
pub fn iae(r: &TimeSeries, y: &TimeSeries) -> Result<f64, GridMismatch> {
    check_aligned(r, y)?;
    Ok(trapz(
        r.dt,
        |i| (r.values[i] - y.values[i]).abs(),
        r.len(),
    ))
}

/// Integral of t |r - y|, with t measured from the start of the series.
pub fn itae(r: &TimeSeries, y: &TimeSeries) -> Result<f64, GridMismatch> {
    check_aligned(r, y)?;
    Ok(trapz(
        r.dt,
        |i| i as f64 * r.dt * (r.values[i] - y.values[i]).abs(),
        r.len(),
    ))
}

/// Integral of t (r - y)^2.
pub fn itse(r: &TimeSeries, y: &TimeSeries) -> Result<f64, GridMismatch> {
    check_aligned(r, y)?;
    Ok(trapz(
        r.dt,
        |i| {
            let e = r.values[i] - y.values[i];
            i as f64 * r.dt * e * e
        },
        r.len(),
    ))
}

/// Integral of u^2.
pub fn isu(u: &TimeSeries) -> f64 {
    trapz(u.dt, |i| u.values[i] * u.values[i], u.len())
}

/// Integral of |u|.
pub fn iau(u: &TimeSeries) -> f64 {
    trapz(u.dt, |i| u.values[i].abs(), u.len())
}

/// Time-averaged squared error: ISE divided by the series span.
pub fn mse(r: &TimeSeries, y: &TimeSeries) -> Result<f64, GridMismatch> {
    check_aligned(r, y)?;
    let ise = trapz(
        r.dt,
        |i| {
            let e = r.values[i] - y.values[i];
            e * e
        },
        r.len(),
    );
    Ok(ise / ((r.len() - 1) as f64 * r.dt))
}

/// All indices at once. The error indices read (r, y), the effort indices
/// read u.
pub fn compute_all(
    r: &TimeSeries,
    y: &TimeSeries,
    u: &TimeSeries,
) -> Result<MetricsReport, GridMismatch> {
    check_aligned(r, u)?;
    Ok(MetricsReport {
        iae: iae(r, y)?,
        itae: itae(r, y)?,
        itse: itse(r, y)?,
        isu: isu(u),
        iau: iau(u),
        mse: mse(r, y)?,
        horizon: (r.len() - 1) as f64 * r.dt,
    })
}
