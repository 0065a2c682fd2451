//! The two tracking differentiators: the tanh-based improved nonlinear TD
//! and the modified Han TD with a linear saturation zone.

use serde::{Deserialize, Serialize};

use crate::simcore::{integrate, FnSystem, IntegratorConfig, SimError};
use crate::{ensure, ValidationError};

/// Design parameters of the tanh-based differentiator
/// z1' = z2, z2' = -R^2 tanh((beta z1 - (1 - alpha) v) / gamma) - R z2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntdParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub r: f64,
}

impl Default for IntdParams {
    /// The reference design values used by the shipped presets.
    fn default() -> Self {
        Self {
            alpha: 0.9790,
            beta: 5.5872,
            gamma: 8.3864,
            r: 26.5005,
        }
    }
}

impl IntdParams {
    pub fn validate(&self) -> Result<(), ValidationError> {
        ensure(
            self.alpha.is_finite() && self.alpha > 0.0 && self.alpha < 1.0,
            "alpha",
            "must be in (0, 1)",
        )?;
        ensure(
            self.beta.is_finite() && self.beta > 0.0,
            "beta",
            "must be finite and positive",
        )?;
        ensure(
            self.gamma.is_finite() && self.gamma > 0.0,
            "gamma",
            "must be finite and positive",
        )?;
        ensure(
            self.r.is_finite() && self.r > 0.0,
            "r",
            "must be finite and positive",
        )
    }

    /// beta / (1 - alpha), the factor that turns raw states into
    /// unity-DC-gain estimates.
    pub fn rescale_gain(&self) -> f64 {
        self.beta / (1.0 - self.alpha)
    }
}

/// Speed factor and linear-zone half-width of the modified Han TD.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HanTdParams {
    pub r: f64,
    pub delta: f64,
}

impl Default for HanTdParams {
    fn default() -> Self {
        Self {
            r: 11.6,
            delta: 0.0005,
        }
    }
}

impl HanTdParams {
    pub fn validate(&self) -> Result<(), ValidationError> {
        ensure(
            self.r.is_finite() && self.r > 0.0,
            "r",
            "must be finite and positive",
        )?;
        ensure(
            self.delta.is_finite() && self.delta > 0.0,
            "delta",
            "must be finite and positive",
        )
    }
}

/// Two-component differentiator state: z1 tracks the input, z2 its
/// derivative.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TdState {
    pub z1: f64,
    pub z2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TdKind {
    Intd,
    Han,
}

/// Parameter set for one differentiator instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TdParams {
    Intd(IntdParams),
    Han(HanTdParams),
}

impl TdParams {
    pub fn kind(&self) -> TdKind {
        match self {
            TdParams::Intd(_) => TdKind::Intd,
            TdParams::Han(_) => TdKind::Han,
        }
    }
}

/// Right-hand side of the tanh-based differentiator.
pub fn intd_deriv(state: TdState, v: f64, p: &IntdParams) -> TdState {
    let q = (p.beta * state.z1 - (1.0 - p.alpha) * v) / p.gamma;
    TdState {
        z1: state.z2,
        z2: -p.r * p.r * q.tanh() - p.r * state.z2,
    }
}

/// Rescaled estimates (v_hat, vdot_hat) = (beta / (1 - alpha)) * (z1, z2),
/// so a settled differentiator tracks a constant input with unity gain.
pub fn intd_estimates(state: TdState, p: &IntdParams) -> (f64, f64) {
    let g = p.rescale_gain();
    (g * state.z1, g * state.z2)
}

/// Linear saturation: A/delta inside the band, sign(A) outside.
pub fn sat(a: f64, delta: f64) -> f64 {
    if a.abs() > delta {
        a.signum()
    } else {
        a / delta
    }
}

/// Right-hand side of the modified Han TD,
/// x1' = x2, x2' = -R sat(x1 - v + x2 |x2| / (2R), delta).
pub fn han_td_deriv(state: TdState, v: f64, p: &HanTdParams) -> TdState {
    let arg = state.z1 - v + state.z2 * state.z2.abs() / (2.0 * p.r);
    TdState {
        z1: state.z2,
        z2: -p.r * sat(arg, p.delta),
    }
}

/// Dispatches to the right-hand side matching `kind`.
///
/// Panics if `params` does not carry the parameter set for `kind`; both are
/// plumbed from the same config, so a mismatch is a programming error.
pub fn td_deriv(kind: TdKind, state: TdState, v: f64, params: &TdParams) -> TdState {
    match (kind, params) {
        (TdKind::Intd, TdParams::Intd(p)) => intd_deriv(state, v, p),
        (TdKind::Han, TdParams::Han(p)) => han_td_deriv(state, v, p),
        _ => panic!("differentiator params do not match kind {kind:?}"),
    }
}

/// Tracking and derivative estimates for either kind. The Han TD states are
/// already unity-gain, so they pass through unchanged.
pub fn td_estimates(kind: TdKind, state: TdState, params: &TdParams) -> (f64, f64) {
    match (kind, params) {
        (TdKind::Intd, TdParams::Intd(p)) => intd_estimates(state, p),
        (TdKind::Han, TdParams::Han(_)) => (state.z1, state.z2),
        _ => panic!("differentiator params do not match kind {kind:?}"),
    }
}

/// Advances a differentiator by `dt` with the input held constant over the
/// interval.
pub fn td_step(
    kind: TdKind,
    state: TdState,
    v_held: f64,
    params: &TdParams,
    integrator: &IntegratorConfig,
    dt: f64,
) -> Result<TdState, SimError> {
    assert!(dt > 0.0, "dt must be positive");
    let sys = FnSystem::new(2, move |_t, x: &[f64], dx: &mut [f64]| {
        let rate = td_deriv(
            kind,
            TdState {
                z1: x[0],
                z2: x[1],
            },
            v_held,
            params,
        );
        dx[0] = rate.z1;
        dx[1] = rate.z2;
    });
    let traj = integrate(&sys, &[state.z1, state.z2], [0.0, dt], integrator, dt)?;
    let last = traj.last();
    Ok(TdState {
        z1: last[0],
        z2: last[1],
    })
}

/// Overflow-safe ln(cosh(x)).
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Energy-like function for the unforced differentiator,
/// V = R^2 (gamma / beta) ln cosh(beta z1 / gamma) + z2^2 / 2.
///
/// The squared speed factor on the ln-cosh term is what makes the decay
/// identity exact: grad V dot f(z) = -R z2^2 along the v = 0 dynamics.
pub fn lyapunov_v(state: TdState, p: &IntdParams) -> f64 {
    p.r * p.r * (p.gamma / p.beta) * ln_cosh(p.beta * state.z1 / p.gamma)
        + 0.5 * state.z2 * state.z2
}

/// Gradient of [`lyapunov_v`].
pub fn lyapunov_grad(state: TdState, p: &IntdParams) -> (f64, f64) {
    (
        p.r * p.r * (p.beta * state.z1 / p.gamma).tanh(),
        state.z2,
    )
}
