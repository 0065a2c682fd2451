//! Nonlinear mass-spring-damper plant with cubic stiffness and cubic
//! damping.

use serde::{Deserialize, Serialize};

use crate::{ensure, ValidationError};

/// Full parameter set of the general plant
/// M x1'' = -D c2 x1'^3 - (D c1 + c3) x1 - c4 x1^3 + (1 + c5 x1'^3) u
/// with displacement envelope |x1| <= a and speed envelope |x2| <= b.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NmsdParams {
    pub m: f64,
    pub d: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub a: f64,
    pub b: f64,
}

impl Default for NmsdParams {
    fn default() -> Self {
        Self {
            m: 1.0,
            d: 1.0,
            c1: 0.01,
            c2: 0.1,
            c3: 0.01,
            c4: 0.67,
            c5: 0.0,
            a: 1.5,
            b: 1.5,
        }
    }
}

impl NmsdParams {
    pub fn validate(&self) -> Result<(), ValidationError> {
        ensure(
            self.m.is_finite() && self.m > 0.0,
            "m",
            "must be finite and positive",
        )?;
        for (name, value) in [
            ("d", self.d),
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4", self.c4),
            ("c5", self.c5),
        ] {
            ensure(value.is_finite(), name, "must be finite")?;
        }
        ensure(
            self.a.is_finite() && self.a > 0.0,
            "a",
            "must be finite and positive",
        )?;
        ensure(
            self.b.is_finite() && self.b > 0.0,
            "b",
            "must be finite and positive",
        )
    }
}

/// Plant state: displacement x1 and velocity x2.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub x1: f64,
    pub x2: f64,
}

impl PlantState {
    /// The measured output is the displacement.
    pub fn output(&self) -> f64 {
        self.x1
    }
}

/// Right-hand side of the general plant.
pub fn nmsd_deriv_general(state: PlantState, u: f64, p: &NmsdParams) -> PlantState {
    let x2_cubed = state.x2 * state.x2 * state.x2;
    let cubic_damp = p.d * p.c2 * x2_cubed;
    let lin = (p.d * p.c1 + p.c3) * state.x1;
    let accel =
        (-cubic_damp - lin - p.c4 * state.x1.powi(3) + (1.0 + p.c5 * x2_cubed) * u) / p.m;
    PlantState {
        x1: state.x2,
        x2: accel,
    }
}

/// Right-hand side with the default coefficients folded in:
/// x2' = -0.1 x2^3 - 0.02 x1 - 0.67 x1^3 + u.
pub fn nmsd_deriv(state: PlantState, u: f64) -> PlantState {
    PlantState {
        x1: state.x2,
        x2: -0.1 * state.x2.powi(3) - 0.02 * state.x1 - 0.67 * state.x1.powi(3) + u,
    }
}

/// Whether the state sits inside the operating envelope.
pub fn within_bounds(state: PlantState, p: &NmsdParams) -> bool {
    state.x1.abs() <= p.a && state.x2.abs() <= p.b
}
