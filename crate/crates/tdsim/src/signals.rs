//! Reference inputs and zero-order-held measurement noise.

use serde::{Deserialize, Serialize};

use crate::{ensure, ValidationError};

/// Algorithm tag written into run provenance so a recorded noise stream can
/// be regenerated by other tools without reading this source.
pub const NOISE_GENERATOR_ID: &str = "splitmix64-slot-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    Step,
    Sine,
    Ramp,
}

/// Reference signal v(t).
///
/// `amplitude` is the step level for `Step`, the peak value for `Sine`, and
/// the slope per second for `Ramp`. The signal is zero before `start_time`
/// and active from `start_time` on (closed left endpoint).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSpec {
    pub kind: ReferenceKind,
    pub amplitude: f64,
    /// Angular frequency in rad/s. Required for `Sine`, ignored otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    #[serde(default)]
    pub start_time: f64,
}

impl ReferenceSpec {
    pub fn validate(&self) -> Result<(), ValidationError> {
        ensure(self.amplitude.is_finite(), "amplitude", "must be finite")?;
        ensure(
            self.start_time.is_finite() && self.start_time >= 0.0,
            "start_time",
            "must be finite and nonnegative",
        )?;
        if self.kind == ReferenceKind::Sine {
            match self.frequency {
                Some(f) if f.is_finite() && f > 0.0 => {}
                _ => {
                    return Err(ValidationError::new(
                        "frequency",
                        "sine references need a finite frequency > 0",
                    ))
                }
            }
        }
        Ok(())
    }
}

/// Evaluates v(t).
pub fn reference_value(spec: &ReferenceSpec, t: f64) -> f64 {
    let tau = t - spec.start_time;
    if tau < 0.0 {
        return 0.0;
    }
    match spec.kind {
        ReferenceKind::Step => spec.amplitude,
        ReferenceKind::Sine => {
            spec.amplitude * (spec.frequency.unwrap_or(0.0) * tau).sin()
        }
        ReferenceKind::Ramp => spec.amplitude * tau,
    }
}

/// Evaluates dv/dt. The step derivative is taken as 0 everywhere (the jump
/// itself has no finite derivative); at the start-time corner the right-hand
/// limit is used.
pub fn reference_derivative(spec: &ReferenceSpec, t: f64) -> f64 {
    let tau = t - spec.start_time;
    if tau < 0.0 {
        return 0.0;
    }
    match spec.kind {
        ReferenceKind::Step => 0.0,
        ReferenceKind::Sine => {
            let w = spec.frequency.unwrap_or(0.0);
            spec.amplitude * w * (w * tau).cos()
        }
        ReferenceKind::Ramp => spec.amplitude,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDistribution {
    Uniform,
    None,
}

/// Sampled measurement noise, held constant over each sampling interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub distribution: NoiseDistribution,
    pub half_range: f64,
    pub sample_period: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            distribution: NoiseDistribution::None,
            half_range: 0.0,
            sample_period: 1e-3,
            seed: 1,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), ValidationError> {
        ensure(
            self.half_range.is_finite() && self.half_range >= 0.0,
            "half_range",
            "must be finite and nonnegative",
        )?;
        ensure(
            self.sample_period.is_finite() && self.sample_period > 0.0,
            "sample_period",
            "must be finite and positive",
        )
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw in [-half_range, half_range] for sample slot k, as a pure
/// function of (seed, k).
fn slot_value(seed: u64, k: u64, half_range: f64) -> f64 {
    let mixed = splitmix64(
        splitmix64(seed) ^ k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    // Top 53 bits give a uniform value in [0, 1).
    let unit = (mixed >> 11) as f64 * (1.0 / 9007199254740992.0);
    half_range * (2.0 * unit - 1.0)
}

/// Returns the zero-order-held noise sample at time t: constant on each
/// interval [k*sample_period, (k+1)*sample_period) and fully determined by
/// (seed, k), so replaying a spec reproduces the waveform regardless of the
/// solver's step sequence.
pub fn noise_sample(spec: &NoiseSpec, t: f64) -> f64 {
    match spec.distribution {
        NoiseDistribution::None => 0.0,
        NoiseDistribution::Uniform => {
            if spec.half_range == 0.0 {
                return 0.0;
            }
            // The quotient gets a tiny forward nudge so grid times that
            // round a hair below a slot boundary land in the intended slot.
            let q = (t / spec.sample_period + 1e-9).max(0.0);
            slot_value(spec.seed, q.floor() as u64, spec.half_range)
        }
    }
}
