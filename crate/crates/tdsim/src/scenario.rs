//! Scenario configuration and the two runners: the sampled closed loop
//! around the plant, and the open-loop differentiator bench.

use serde::{Deserialize, Serialize};

use crate::analysis::{classify_phase, Phase};
use crate::differentiators::{
    td_estimates, td_step, HanTdParams, IntdParams, TdKind, TdParams, TdState,
};
use crate::metrics::{compute_all, MetricsReport, TimeSeries};
use crate::nlpid::{controller_step, ControllerConfig, ControllerState, NlpidParams};
use crate::plant::{nmsd_deriv_general, within_bounds, NmsdParams, PlantState};
use crate::signals::{
    noise_sample, reference_derivative, reference_value, NoiseSpec, ReferenceSpec,
    NOISE_GENERATOR_ID,
};
use crate::simcore::{integrate, FnSystem, IntegratorConfig, SimError};
use crate::{ensure, ValidationError};

/// Starting point of every stateful block in the loop.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InitialStates {
    pub plant: PlantState,
    pub td1: TdState,
    pub td2: TdState,
}

/// Complete description of one simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub td_kind: TdKind,
    pub horizon: f64,
    pub controller_dt: f64,
    #[serde(default)]
    pub intd: IntdParams,
    #[serde(default)]
    pub han_td: HanTdParams,
    #[serde(default)]
    pub nlpid: NlpidParams,
    #[serde(default)]
    pub plant: NmsdParams,
    pub reference: ReferenceSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub initial_states: InitialStates,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ValidationError> {
        ensure(
            self.horizon.is_finite() && self.horizon > 0.0,
            "horizon",
            "must be finite and positive",
        )?;
        ensure(
            self.controller_dt.is_finite() && self.controller_dt > 0.0,
            "controller_dt",
            "must be finite and positive",
        )?;
        let n = (self.horizon / self.controller_dt).round();
        ensure(
            n >= 1.0 && (self.horizon - n * self.controller_dt).abs() <= 1e-6 * self.horizon,
            "horizon",
            "must be a whole number of controller periods",
        )?;
        self.intd.validate().map_err(|e| e.prefixed("intd"))?;
        self.han_td.validate().map_err(|e| e.prefixed("han_td"))?;
        self.nlpid.validate().map_err(|e| e.prefixed("nlpid"))?;
        self.plant.validate().map_err(|e| e.prefixed("plant"))?;
        self.reference
            .validate()
            .map_err(|e| e.prefixed("reference"))?;
        self.noise.validate().map_err(|e| e.prefixed("noise"))?;
        self.integrator
            .validate()
            .map_err(|e| e.prefixed("integrator"))?;
        let s = &self.initial_states;
        ensure(
            [s.plant.x1, s.plant.x2, s.td1.z1, s.td1.z2, s.td2.z1, s.td2.z2]
                .iter()
                .all(|v| v.is_finite()),
            "initial_states",
            "must be finite",
        )
    }

    /// The controller-facing slice of this config.
    pub fn controller_config(&self) -> ControllerConfig {
        ControllerConfig {
            td_kind: self.td_kind,
            intd: self.intd,
            han_td: self.han_td,
            nlpid: self.nlpid,
            integrator: self.integrator,
        }
    }

    fn tick_count(&self) -> usize {
        (self.horizon / self.controller_dt).round() as usize
    }
}

/// What produced a result: the full echoed config plus the noise generator
/// identifier, enough to replay the run exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub config: ScenarioConfig,
    pub noise_generator: &'static str,
}

/// Uniformly sampled channels of one run plus the computed indices.
///
/// Closed-loop runs fill x1/x2 with the plant state and leave `phase` empty.
/// Open-loop runs reuse the channels: y_clean carries the tracking estimate,
/// u the derivative estimate, x1/x2 the tracking and derivative errors, and
/// `phase` is present for the tanh-based differentiator.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub t0: f64,
    pub dt: f64,
    pub r: Vec<f64>,
    pub y_clean: Vec<f64>,
    pub y_measured: Vec<f64>,
    pub u: Vec<f64>,
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub phase: Option<Vec<Phase>>,
    pub metrics: MetricsReport,
    pub provenance: Provenance,
    pub envelope_exceeded: bool,
}

impl RunResult {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

/// Runs the sampled loop: at every tick the controller sees the current
/// reference and measurement, advances its differentiators, and the control
/// value is held constant while the plant integrates to the next tick.
pub fn run_closed_loop(config: &ScenarioConfig) -> Result<RunResult, SimError> {
    let dt = config.controller_dt;
    let n = config.tick_count();
    let ctrl = config.controller_config();
    let mut cs = ControllerState {
        td1: config.initial_states.td1,
        td2: config.initial_states.td2,
        ..ControllerState::default()
    };
    let mut plant = config.initial_states.plant;
    let plant_params = config.plant;

    let mut r = Vec::with_capacity(n + 1);
    let mut y_clean = Vec::with_capacity(n + 1);
    let mut y_measured = Vec::with_capacity(n + 1);
    let mut u_log = Vec::with_capacity(n + 1);
    let mut z1 = Vec::with_capacity(n + 1);
    let mut z2 = Vec::with_capacity(n + 1);
    let mut x1 = Vec::with_capacity(n + 1);
    let mut x2 = Vec::with_capacity(n + 1);
    let mut envelope_exceeded = false;

    for k in 0..=n {
        let t = k as f64 * dt;
        let r_t = reference_value(&config.reference, t);
        let y_t = plant.output();
        let y_m = y_t + noise_sample(&config.noise, t);

        r.push(r_t);
        y_clean.push(y_t);
        y_measured.push(y_m);
        z1.push(cs.td2.z1);
        z2.push(cs.td2.z2);
        x1.push(plant.x1);
        x2.push(plant.x2);
        envelope_exceeded |= !within_bounds(plant, &plant_params);

        let (next_cs, u) = controller_step(&cs, r_t, y_m, &ctrl, dt)?;
        cs = next_cs;
        u_log.push(u);

        if k < n {
            let sys = FnSystem::new(2, move |_t, x: &[f64], dx: &mut [f64]| {
                let rate = nmsd_deriv_general(
                    PlantState { x1: x[0], x2: x[1] },
                    u,
                    &plant_params,
                );
                dx[0] = rate.x1;
                dx[1] = rate.x2;
            });
            let traj = integrate(
                &sys,
                &[plant.x1, plant.x2],
                [0.0, dt],
                &config.integrator,
                dt,
            )?;
            let last = traj.last();
            plant = PlantState {
                x1: last[0],
                x2: last[1],
            };
        }
    }

    let grid = |values: Vec<f64>| {
        TimeSeries::new(0.0, dt, values).expect("runner builds uniform finite series")
    };
    let metrics = compute_all(&grid(r.clone()), &grid(y_measured.clone()), &grid(u_log.clone()))
        .expect("series share one grid");

    Ok(RunResult {
        t0: 0.0,
        dt,
        r,
        y_clean,
        y_measured,
        u: u_log,
        z1,
        z2,
        x1,
        x2,
        phase: None,
        metrics,
        provenance: Provenance {
            config: config.clone(),
            noise_generator: NOISE_GENERATOR_ID,
        },
        envelope_exceeded,
    })
}

/// Runs one differentiator open loop against a reference signal, with the
/// (possibly noisy) input held constant between output samples.
///
/// Channel mapping in the result: r is the clean input, y_clean the tracking
/// estimate, y_measured the noisy input actually fed in, u the derivative
/// estimate, z1/z2 the raw internal state, x1 the tracking error against the
/// clean input, x2 the derivative error against its exact derivative. The
/// indices treat the tracking estimate as the output and the derivative
/// estimate as the effort.
#[allow(clippy::too_many_arguments)]
pub fn run_open_loop_td(
    kind: TdKind,
    params: &TdParams,
    reference: &ReferenceSpec,
    noise: &NoiseSpec,
    horizon: f64,
    integrator: &IntegratorConfig,
    output_dt: f64,
) -> Result<RunResult, SimError> {
    assert!(horizon > 0.0 && output_dt > 0.0, "spans must be positive");
    let n_f = (horizon / output_dt).round();
    assert!(
        n_f >= 1.0 && (horizon - n_f * output_dt).abs() <= 1e-6 * horizon,
        "horizon must be a whole number of output periods"
    );
    let n = n_f as usize;
    let mut state = TdState::default();

    let mut r = Vec::with_capacity(n + 1);
    let mut y_clean = Vec::with_capacity(n + 1);
    let mut y_measured = Vec::with_capacity(n + 1);
    let mut u = Vec::with_capacity(n + 1);
    let mut z1 = Vec::with_capacity(n + 1);
    let mut z2 = Vec::with_capacity(n + 1);
    let mut x1 = Vec::with_capacity(n + 1);
    let mut x2 = Vec::with_capacity(n + 1);
    let mut phase: Option<Vec<Phase>> = match params {
        TdParams::Intd(_) => Some(Vec::with_capacity(n + 1)),
        TdParams::Han(_) => None,
    };

    for k in 0..=n {
        let t = k as f64 * output_dt;
        let v_c = reference_value(reference, t);
        let v_m = v_c + noise_sample(noise, t);
        let (v_hat, vdot_hat) = td_estimates(kind, state, params);

        r.push(v_c);
        y_clean.push(v_hat);
        y_measured.push(v_m);
        u.push(vdot_hat);
        z1.push(state.z1);
        z2.push(state.z2);
        x1.push(v_c - v_hat);
        x2.push(reference_derivative(reference, t) - vdot_hat);
        if let (Some(list), TdParams::Intd(p)) = (phase.as_mut(), params) {
            list.push(classify_phase(state, v_c, p));
        }

        if k < n {
            state = td_step(kind, state, v_m, params, integrator, output_dt)?;
        }
    }

    let grid = |values: Vec<f64>| {
        TimeSeries::new(0.0, output_dt, values).expect("runner builds uniform finite series")
    };
    let metrics = compute_all(&grid(r.clone()), &grid(y_clean.clone()), &grid(u.clone()))
        .expect("series share one grid");

    let (intd, han_td) = match params {
        TdParams::Intd(p) => (*p, HanTdParams::default()),
        TdParams::Han(p) => (IntdParams::default(), *p),
    };
    let config = ScenarioConfig {
        td_kind: kind,
        horizon,
        controller_dt: output_dt,
        intd,
        han_td,
        nlpid: NlpidParams::default(),
        plant: NmsdParams::default(),
        reference: *reference,
        noise: *noise,
        integrator: *integrator,
        initial_states: InitialStates::default(),
    };

    Ok(RunResult {
        t0: 0.0,
        dt: output_dt,
        r,
        y_clean,
        y_measured,
        u,
        z1,
        z2,
        x1,
        x2,
        phase,
        metrics,
        provenance: Provenance {
            config,
            noise_generator: NOISE_GENERATOR_ID,
        },
        envelope_exceeded: false,
    })
}

/// Names accepted by [`preset`], in a stable order.
pub const PRESET_NAMES: [&str; 4] = ["case1_han", "case1_intd", "case2_han", "case2_intd"];

/// Built-in scenarios: a 0.1 step over ten seconds, either differentiator,
/// noise-free (case 1) or with uniform measurement noise (case 2).
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    use crate::signals::{NoiseDistribution, ReferenceKind};
    let (td_kind, noisy) = match name {
        "case1_han" => (TdKind::Han, false),
        "case1_intd" => (TdKind::Intd, false),
        "case2_han" => (TdKind::Han, true),
        "case2_intd" => (TdKind::Intd, true),
        _ => return None,
    };
    let noise = if noisy {
        NoiseSpec {
            distribution: NoiseDistribution::Uniform,
            half_range: 1e-3,
            sample_period: 1e-3,
            seed: 1,
        }
    } else {
        NoiseSpec {
            distribution: NoiseDistribution::None,
            half_range: 0.0,
            sample_period: 1e-3,
            seed: 1,
        }
    };
    Some(ScenarioConfig {
        td_kind,
        horizon: 10.0,
        controller_dt: 1e-3,
        intd: IntdParams::default(),
        han_td: HanTdParams::default(),
        nlpid: NlpidParams::default(),
        plant: NmsdParams::default(),
        reference: ReferenceSpec {
            kind: ReferenceKind::Step,
            amplitude: 0.1,
            frequency: None,
            start_time: 0.0,
        },
        noise,
        integrator: IntegratorConfig::default(),
        initial_states: InitialStates::default(),
    })
}
