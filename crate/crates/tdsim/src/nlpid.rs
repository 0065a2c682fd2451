//! Nonlinear PID controller built from fal-shaped error terms, with both
//! reference and measurement filtered through tracking differentiators.

use serde::{Deserialize, Serialize};

use crate::differentiators::{td_estimates, td_step, HanTdParams, IntdParams, TdKind, TdParams, TdState};
use crate::simcore::{IntegratorConfig, SimError};
use crate::{ensure, ValidationError};

/// Piecewise error shaping: linear with slope delta^(alpha - 1) inside the
/// band |e| <= delta, |e|^alpha sign(e) outside.
pub fn fal(e: f64, alpha: f64, delta: f64) -> f64 {
    if e.abs() <= delta {
        e / delta.powf(1.0 - alpha)
    } else {
        e.abs().powf(alpha) * e.signum()
    }
}

/// One shaped channel of the controller: u_term = gain * fal(e, alpha, delta).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FalTerm {
    pub gain: f64,
    pub alpha: f64,
    pub delta: f64,
}

impl FalTerm {
    pub fn validate(&self) -> Result<(), ValidationError> {
        ensure(
            self.gain.is_finite(),
            "gain",
            "must be finite",
        )?;
        ensure(
            self.alpha.is_finite() && (0.5..=1.0).contains(&self.alpha),
            "alpha",
            "must be in [0.5, 1]",
        )?;
        ensure(
            self.delta.is_finite() && self.delta > 0.0,
            "delta",
            "must be finite and positive",
        )
    }
}

/// The three channel parameter triples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NlpidParams {
    pub p_term: FalTerm,
    pub d_term: FalTerm,
    pub i_term: FalTerm,
}

impl Default for NlpidParams {
    /// Tuned values used by the shipped presets.
    fn default() -> Self {
        Self {
            p_term: FalTerm {
                gain: 1.9151,
                alpha: 0.7128,
                delta: 0.1038,
            },
            d_term: FalTerm {
                gain: 2.0130,
                alpha: 0.8680,
                delta: 0.0354,
            },
            i_term: FalTerm {
                gain: 0.0800,
                alpha: 0.9888,
                delta: 1.1916,
            },
        }
    }
}

impl NlpidParams {
    pub fn validate(&self) -> Result<(), ValidationError> {
        self.p_term.validate().map_err(|e| e.prefixed("p_term"))?;
        self.d_term.validate().map_err(|e| e.prefixed("d_term"))?;
        self.i_term.validate().map_err(|e| e.prefixed("i_term"))
    }
}

/// Everything the controller carries between samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    /// Differentiator fed with the reference.
    pub td1: TdState,
    /// Differentiator fed with the measurement.
    pub td2: TdState,
    /// Trapezoidal accumulation of the tracking error.
    pub integral_error: f64,
    /// Previous error sample, carried for the trapezoidal accumulation of
    /// `integral_error`.
    pub prev_error: f64,
}

/// Static configuration of the controller: which differentiator to run on
/// both channels, plus all parameter sets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControllerConfig {
    pub td_kind: TdKind,
    pub intd: IntdParams,
    pub han_td: HanTdParams,
    pub nlpid: NlpidParams,
    pub integrator: IntegratorConfig,
}

impl ControllerConfig {
    fn td_params(&self) -> TdParams {
        match self.td_kind {
            TdKind::Intd => TdParams::Intd(self.intd),
            TdKind::Han => TdParams::Han(self.han_td),
        }
    }
}

/// Control law u = kp fal(e) + kd fal(e_dot) + ki fal(e_int), each channel
/// with its own (alpha, delta).
pub fn nlpid_control(e: f64, e_dot: f64, e_int: f64, p: &NlpidParams) -> f64 {
    p.p_term.gain * fal(e, p.p_term.alpha, p.p_term.delta)
        + p.d_term.gain * fal(e_dot, p.d_term.alpha, p.d_term.delta)
        + p.i_term.gain * fal(e_int, p.i_term.alpha, p.i_term.delta)
}

/// One controller sample period: advance both differentiators with their
/// inputs held, rebuild the error channels from the new estimates, and
/// produce the control value.
pub fn controller_step(
    state: &ControllerState,
    r_sample: f64,
    y_sample: f64,
    config: &ControllerConfig,
    dt: f64,
) -> Result<(ControllerState, f64), SimError> {
    let params = config.td_params();
    let td1 = td_step(
        config.td_kind,
        state.td1,
        r_sample,
        &params,
        &config.integrator,
        dt,
    )?;
    let td2 = td_step(
        config.td_kind,
        state.td2,
        y_sample,
        &params,
        &config.integrator,
        dt,
    )?;
    let (v1, vd1) = td_estimates(config.td_kind, td1, &params);
    let (v2, vd2) = td_estimates(config.td_kind, td2, &params);
    let e = v1 - v2;
    let e_dot = vd1 - vd2;
    let integral_error = state.integral_error + dt * (state.prev_error + e) * 0.5;
    let u = nlpid_control(e, e_dot, integral_error, &config.nlpid);
    Ok((
        ControllerState {
            td1,
            td2,
            integral_error,
            prev_error: e,
        },
        u,
    ))
}
