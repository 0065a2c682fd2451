//! Simulation library for nonlinear tracking differentiators closed around a
//! nonlinear mass-spring-damper plant with a fal-based nonlinear PID in the
//! loop.
//!
//! Modules follow the signal path: [`signals`] produces reference inputs and
//! sampled measurement noise, [`differentiators`] hosts the two tracking
//! differentiators, [`nlpid`] the control law and controller state machine,
//! [`plant`] the mass-spring-damper dynamics, [`simcore`] the ODE
//! integrators, [`metrics`] the performance indices, [`analysis`] closed-form
//! characterizations of the differentiator, and [`scenario`] the end-to-end
//! experiment runner with the shipped presets.

pub mod analysis;
pub mod differentiators;
pub mod metrics;
pub mod nlpid;
pub mod plant;
pub mod scenario;
pub mod signals;
pub mod simcore;

use thiserror::Error;

/// A configuration field failed validation. `field` uses dotted paths for
/// nested settings, e.g. `nlpid.p_term.alpha`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid {field}: {reason}")]
pub struct ValidationError {
    pub field: String,
    pub reason: String,
}

impl ValidationError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Prepends an outer config section to the field path.
    pub fn prefixed(mut self, section: &str) -> Self {
        self.field = format!("{section}.{}", self.field);
        self
    }
}

pub(crate) fn ensure(
    ok: bool,
    field: &str,
    reason: &str,
) -> Result<(), ValidationError> {
    if ok {
        Ok(())
    } else {
        Err(ValidationError::new(field, reason))
    }
}
