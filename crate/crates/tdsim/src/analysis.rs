//! Closed-form results about the tanh-based differentiator: the saturated
//! arrival trajectory, the linearized tracking characteristics, and phase
//! classification of simulated states.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::differentiators::{IntdParams, TdState};

/// Natural frequency, damping ratio, and DC gain of the linearized
/// differentiator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderChar {
    pub omega_n: f64,
    pub xi: f64,
    pub dc_gain: f64,
}

/// Exact solution of the fully saturated subsystem z1' = z2,
/// z2' = -R^2 - R z2, valid while the tanh argument stays pinned at +1.
pub fn arrival_solution(t: f64, z0: TdState, r: f64) -> TdState {
    let decay = (-r * t).exp();
    TdState {
        z1: -r * t - (1.0 + z0.z2 / r) * decay + z0.z1 + z0.z2 / r + 1.0,
        z2: -r + (r + z0.z2) * decay,
    }
}

/// Second-order characteristics of the linearized tracking dynamics:
/// omega_n = R sqrt(beta / gamma), xi = sqrt(gamma / beta) / 2,
/// dc gain (1 - alpha) / beta from input to the raw z1 state.
pub fn second_order_char(p: &IntdParams) -> SecondOrderChar {
    SecondOrderChar {
        omega_n: p.r * (p.beta / p.gamma).sqrt(),
        xi: 0.5 * (p.gamma / p.beta).sqrt(),
        dc_gain: (1.0 - p.alpha) / p.beta,
    }
}

/// The evaluation point fell on a pole of the error transfer function.
#[derive(Debug, Error)]
#[error("transfer function evaluated at a pole: s = {s}")]
pub struct PoleHit {
    pub s: Complex64,
}

/// Tracking (and derivative) error transfer function of the linearized
/// differentiator, L(s) = s (s + R) / (s^2 + R s + R^2 beta / gamma).
pub fn tracking_error_tf_gain(s: Complex64, p: &IntdParams) -> Result<Complex64, PoleHit> {
    let k = p.r * p.r * p.beta / p.gamma;
    let num = s * (s + p.r);
    let den = s * s + p.r * s + k;
    let scale = s.norm_sqr().max(k);
    if den.norm() < 1e-12 * scale {
        return Err(PoleHit { s });
    }
    Ok(num / den)
}

/// Magnitude in dB of the derivative channel of the linearized
/// differentiator at angular frequency omega, for the raw z2 state:
/// a differentiation (+20 dB per decade) shaped by the second-order
/// denominator.
pub fn bode_magnitude_db(omega: f64, p: &IntdParams) -> f64 {
    let ch = second_order_char(p);
    let x = omega / ch.omega_n;
    20.0 * ch.dc_gain.log10() + 20.0 * omega.log10()
        - 10.0 * ((1.0 - x * x).powi(2) + (2.0 * ch.xi * x).powi(2)).log10()
}

/// Which regime a differentiator state is in relative to a constant input,
/// judged by the tanh argument q = (beta z1 - (1 - alpha) v) / gamma.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    ArrivalHigh,
    ArrivalLow,
    Transition,
    Tracking,
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::ArrivalHigh => "arrival_high",
            Phase::ArrivalLow => "arrival_low",
            Phase::Transition => "transition",
            Phase::Tracking => "tracking",
        }
    }
}

/// Classifies a state: |q| > 3 counts as saturated arrival (signed), |q| <
/// 0.1 as settled tracking, anything between as the transition band.
pub fn classify_phase(state: TdState, v: f64, p: &IntdParams) -> Phase {
    let q = (p.beta * state.z1 - (1.0 - p.alpha) * v) / p.gamma;
    if q > 3.0 {
        Phase::ArrivalHigh
    } else if q < -3.0 {
        Phase::ArrivalLow
    } else if q.abs() < 0.1 {
        Phase::Tracking
    } else {
        Phase::Transition
    }
}

/// Least-squares slope of magnitude against log10(omega), in dB per decade.
/// Returns None when fewer than two points are supplied.
pub fn fit_slope_db_per_decade(omegas: &[f64], mags_db: &[f64]) -> Option<f64> {
    assert_eq!(omegas.len(), mags_db.len());
    let n = omegas.len();
    if n < 2 {
        return None;
    }
    let xs: Vec<f64> = omegas.iter().map(|w| w.log10()).collect();
    let x_mean = xs.iter().sum::<f64>() / n as f64;
    let y_mean = mags_db.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(mags_db) {
        num += (x - x_mean) * (y - y_mean);
        den += (x - x_mean) * (x - x_mean);
    }
    Some(num / den)
}
