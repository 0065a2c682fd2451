//! Explicit Runge-Kutta integration: classical fixed-step RK4 and an
//! adaptive Dormand-Prince 5(4) pair with dense output.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{ensure, ValidationError};

/// Right-hand side of an ODE system dx/dt = f(t, x).
pub trait OdeSystem {
    fn dim(&self) -> usize;
    /// Writes f(t, x) into `dx` (length `dim`).
    fn deriv(&self, t: f64, x: &[f64], dx: &mut [f64]);
}

/// Adapts a closure to [`OdeSystem`].
pub struct FnSystem<F: Fn(f64, &[f64], &mut [f64])> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64, &[f64], &mut [f64])> FnSystem<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(f64, &[f64], &mut [f64])> OdeSystem for FnSystem<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn deriv(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        (self.f)(t, x, dx)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4Fixed,
    Rk45Adaptive,
}

/// Step-size and tolerance settings. `dt` is the fixed step for
/// [`Method::Rk4Fixed`] and the initial step for [`Method::Rk45Adaptive`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub method: Method,
    pub dt: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_dt: f64,
    pub min_dt: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk45Adaptive,
            dt: 1e-3,
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            max_dt: 0.1,
            min_dt: 1e-12,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), ValidationError> {
        ensure(
            self.dt.is_finite() && self.dt > 0.0,
            "dt",
            "must be finite and positive",
        )?;
        ensure(
            self.rel_tol.is_finite() && self.rel_tol > 0.0,
            "rel_tol",
            "must be finite and positive",
        )?;
        ensure(
            self.abs_tol.is_finite() && self.abs_tol > 0.0,
            "abs_tol",
            "must be finite and positive",
        )?;
        ensure(
            self.min_dt.is_finite() && self.min_dt > 0.0,
            "min_dt",
            "must be finite and positive",
        )?;
        ensure(
            self.max_dt.is_finite() && self.max_dt >= self.min_dt,
            "max_dt",
            "must be finite and at least min_dt",
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    /// The adaptive controller asked for a step below `min_dt`, which
    /// signals stiffness or blow-up of the integrated system.
    #[error("adaptive step underflow at t = {t} (required step below {min_dt})")]
    StepUnderflow { t: f64, min_dt: f64 },
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
}

/// Multi-channel trajectory on an exactly uniform output grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    /// One state vector per grid point, including the initial state.
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Copies out one state component across all samples.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.states.iter().map(|row| row[c]).collect()
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least one sample")
    }
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `system` from `x0` over `t_span`, sampling the solution on the
/// uniform grid t0, t0 + output_dt, ..., t_end.
///
/// The span must be a whole number of output intervals (all callers build
/// their grids that way). The adaptive method keeps the local error estimate
/// below the configured tolerances per step and fills the output grid by
/// cubic Hermite interpolation between accepted steps.
pub fn integrate<S: OdeSystem + ?Sized>(
    system: &S,
    x0: &[f64],
    t_span: [f64; 2],
    config: &IntegratorConfig,
    output_dt: f64,
) -> Result<Trajectory, SimError> {
    let [t0, t1] = t_span;
    let span = t1 - t0;
    assert!(span > 0.0, "t_span must be increasing");
    assert!(output_dt > 0.0, "output_dt must be positive");
    assert_eq!(x0.len(), system.dim(), "x0 length must match system dim");
    let n_out = (span / output_dt).round().max(1.0) as usize;
    assert!(
        (n_out as f64 * output_dt - span).abs() <= 1e-6 * span.max(output_dt),
        "span must be a whole number of output intervals"
    );

    match config.method {
        Method::Rk4Fixed => rk4_fixed(system, x0, t0, config.dt, output_dt, n_out),
        Method::Rk45Adaptive => dopri5(system, x0, t0, config, output_dt, n_out),
    }
}

fn check_finite(x: &[f64], t: f64) -> Result<(), SimError> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SimError::NonFiniteState { t })
    }
}

fn rk4_fixed<S: OdeSystem + ?Sized>(
    system: &S,
    x0: &[f64],
    t0: f64,
    dt: f64,
    output_dt: f64,
    n_out: usize,
) -> Result<Trajectory, SimError> {
    let dim = system.dim();
    let substeps = (output_dt / dt - 1e-9).ceil().max(1.0) as usize;
    let h = output_dt / substeps as f64;
    let mut y = x0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut ytmp = vec![0.0; dim];
    let mut states = Vec::with_capacity(n_out + 1);
    check_finite(&y, t0)?;
    states.push(y.clone());

    for k in 0..n_out {
        let interval_start = t0 + k as f64 * output_dt;
        for s in 0..substeps {
            let t = interval_start + s as f64 * h;
            system.deriv(t, &y, &mut k1);
            for i in 0..dim {
                ytmp[i] = y[i] + 0.5 * h * k1[i];
            }
            system.deriv(t + 0.5 * h, &ytmp, &mut k2);
            for i in 0..dim {
                ytmp[i] = y[i] + 0.5 * h * k2[i];
            }
            system.deriv(t + 0.5 * h, &ytmp, &mut k3);
            for i in 0..dim {
                ytmp[i] = y[i] + h * k3[i];
            }
            system.deriv(t + h, &ytmp, &mut k4);
            for i in 0..dim {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        check_finite(&y, interval_start + output_dt)?;
        states.push(y.clone());
    }

    Ok(Trajectory {
        t0,
        dt: output_dt,
        states,
    })
}

fn dopri5<S: OdeSystem + ?Sized>(
    system: &S,
    x0: &[f64],
    t0: f64,
    config: &IntegratorConfig,
    output_dt: f64,
    n_out: usize,
) -> Result<Trajectory, SimError> {
    let dim = system.dim();
    let t_end = t0 + n_out as f64 * output_dt;
    let grid_dust = output_dt * 1e-9;

    let mut t = t0;
    let mut y = x0.to_vec();
    check_finite(&y, t)?;

    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut k5 = vec![0.0; dim];
    let mut k6 = vec![0.0; dim];
    let mut k7 = vec![0.0; dim];
    let mut ytmp = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    system.deriv(t, &y, &mut k1);

    let mut h = config.dt.clamp(config.min_dt, config.max_dt);
    let mut states = Vec::with_capacity(n_out + 1);
    states.push(y.clone());
    let mut next = 1usize;

    while next <= n_out {
        let remaining = t_end - t;
        if remaining <= 0.0 {
            break;
        }
        let h_eff = h.min(remaining);
        // Final slivers shorter than min_dt are taken unconditionally; the
        // local error over such a span is far below any tolerance.
        let end_sliver = remaining <= config.min_dt;

        for i in 0..dim {
            ytmp[i] = y[i] + h_eff * A21 * k1[i];
        }
        system.deriv(t + C2 * h_eff, &ytmp, &mut k2);
        for i in 0..dim {
            ytmp[i] = y[i] + h_eff * (A31 * k1[i] + A32 * k2[i]);
        }
        system.deriv(t + C3 * h_eff, &ytmp, &mut k3);
        for i in 0..dim {
            ytmp[i] = y[i] + h_eff * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        system.deriv(t + C4 * h_eff, &ytmp, &mut k4);
        for i in 0..dim {
            ytmp[i] = y[i]
                + h_eff * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        system.deriv(t + C5 * h_eff, &ytmp, &mut k5);
        for i in 0..dim {
            ytmp[i] = y[i]
                + h_eff
                    * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i]
                        + A65 * k5[i]);
        }
        system.deriv(t + h_eff, &ytmp, &mut k6);
        for i in 0..dim {
            y_new[i] = y[i]
                + h_eff * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        system.deriv(t + h_eff, &y_new, &mut k7);

        let mut acc = 0.0;
        for i in 0..dim {
            let err_i = h_eff
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                    + E7 * k7[i]);
            let sc = config.abs_tol
                + config.rel_tol * y[i].abs().max(y_new[i].abs());
            let ratio = err_i / sc;
            acc += ratio * ratio;
        }
        let err = (acc / dim as f64).sqrt();

        let accept = end_sliver || (err.is_finite() && err <= 1.0);
        if accept {
            check_finite(&y_new, t + h_eff)?;
            while next <= n_out {
                let tg = t0 + next as f64 * output_dt;
                if tg > t + h_eff + grid_dust {
                    break;
                }
                let th = ((tg - t) / h_eff).clamp(0.0, 1.0);
                let h00 = (1.0 + 2.0 * th) * (1.0 - th) * (1.0 - th);
                let h10 = th * (1.0 - th) * (1.0 - th);
                let h01 = th * th * (3.0 - 2.0 * th);
                let h11 = th * th * (th - 1.0);
                let row: Vec<f64> = (0..dim)
                    .map(|i| {
                        h00 * y[i]
                            + h10 * h_eff * k1[i]
                            + h01 * y_new[i]
                            + h11 * h_eff * k7[i]
                    })
                    .collect();
                states.push(row);
                next += 1;
            }
            t += h_eff;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h_eff * factor).clamp(config.min_dt, config.max_dt);
        } else {
            let factor = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.2, 0.9)
            } else {
                0.2
            };
            let h_retry = h_eff * factor;
            if h_retry < config.min_dt {
                return Err(SimError::StepUnderflow {
                    t,
                    min_dt: config.min_dt,
                });
            }
            h = h_retry;
        }
    }

    // Guard against float dust at the very end of the span.
    while next <= n_out {
        states.push(y.clone());
        next += 1;
    }

    Ok(Trajectory {
        t0,
        dt: output_dt,
        states,
    })
}
