//! Acceptance checks for the whole workspace, one test per criterion. Each
//! test prints its sub-checks and a final PASS/FAIL line, then asserts.

use std::process::Command;
use std::time::Instant;

use tdsim::analysis::{
    arrival_solution, bode_magnitude_db, fit_slope_db_per_decade, second_order_char,
};
use tdsim::differentiators::{
    intd_deriv, lyapunov_grad, lyapunov_v, sat, IntdParams, TdKind, TdParams, TdState,
};
use tdsim::nlpid::{fal, NlpidParams};
use tdsim::plant::{nmsd_deriv, nmsd_deriv_general, NmsdParams, PlantState};
use tdsim::scenario::{preset, run_closed_loop, run_open_loop_td};
use tdsim::simcore::{integrate, FnSystem, IntegratorConfig, Method};

struct Criterion {
    number: u32,
    label: &'static str,
    failures: Vec<String>,
}

impl Criterion {
    fn new(number: u32, label: &'static str) -> Self {
        Self {
            number,
            label,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        println!("  [{}] {what}", if ok { "ok" } else { "FAIL" });
        if !ok {
            self.failures.push(what);
        }
    }

    fn finish(self) {
        let status = if self.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        println!("criterion {} ({}): {status}", self.number, self.label);
        assert!(
            self.failures.is_empty(),
            "criterion {} ({}) failed: {}",
            self.number,
            self.label,
            self.failures.join("; ")
        );
    }
}

/// Small deterministic generator for test inputs.
struct Lcg(u64);

impl Lcg {
    fn next_unit(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_unit()
    }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn tight() -> IntegratorConfig {
    IntegratorConfig {
        rel_tol: 1e-10,
        abs_tol: 1e-12,
        ..IntegratorConfig::default()
    }
}

#[test]
fn case1_noise_free_indices_and_orderings() {
    let mut c = Criterion::new(1, "noise-free index reproduction");

    let started = Instant::now();
    let output = Command::new(env!("CARGO_BIN_EXE_tdsim"))
        .args(["compare", "case1_han", "case1_intd", "--out"])
        .arg(tempfile::tempdir().unwrap().path())
        .env_remove("TDSIM_CSV_PRECISION")
        .output()
        .unwrap();
    let elapsed = started.elapsed();
    c.check(
        output.status.success(),
        format!("compare command succeeds ({})", output.status),
    );
    c.check(
        elapsed.as_secs_f64() < 30.0,
        format!("compare runtime {:.2} s < 30 s", elapsed.as_secs_f64()),
    );

    let han = run_closed_loop(&preset("case1_han").unwrap()).unwrap().metrics;
    let intd = run_closed_loop(&preset("case1_intd").unwrap()).unwrap().metrics;

    for (name, value, target, rel) in [
        ("iae", intd.iae, 0.037965, 0.20),
        ("itae", intd.itae, 0.007961, 0.20),
        ("itse", intd.itse, 0.000325, 0.20),
        ("isu", intd.isu, 0.559512, 0.25),
        ("iau", intd.iau, 0.540125, 0.25),
    ] {
        c.check(
            within(value, target, rel),
            format!(
                "intd {name} = {value:.6} within {:.0}% of {target}",
                rel * 100.0
            ),
        );
    }

    for (name, intd_v, han_v) in [
        ("iae", intd.iae, han.iae),
        ("itae", intd.itae, han.itae),
        ("itse", intd.itse, han.itse),
        ("iau", intd.iau, han.iau),
    ] {
        c.check(
            intd_v < han_v,
            format!("ordering intd {name} {intd_v:.6} < han {han_v:.6}"),
        );
    }
    c.check(
        han.isu < intd.isu,
        format!("ordering han isu {:.6} < intd isu {:.6}", han.isu, intd.isu),
    );

    c.finish();
}

#[test]
fn case2_noisy_seed_sweep_orderings() {
    let mut c = Criterion::new(2, "noisy seed-sweep orderings");

    let started = Instant::now();
    let mut rows = Vec::new();
    for seed in 1..=10u64 {
        let mut han_cfg = preset("case2_han").unwrap();
        let mut intd_cfg = preset("case2_intd").unwrap();
        han_cfg.noise.seed = seed;
        intd_cfg.noise.seed = seed;
        let han = run_closed_loop(&han_cfg).unwrap().metrics;
        let intd = run_closed_loop(&intd_cfg).unwrap().metrics;
        rows.push((seed, han, intd));
    }
    let elapsed = started.elapsed();

    for (name, pick) in [
        ("iae", (|m: &tdsim::metrics::MetricsReport| m.iae) as fn(&_) -> f64),
        ("itae", |m| m.itae),
        ("itse", |m| m.itse),
        ("isu", |m| m.isu),
        ("iau", |m| m.iau),
    ] {
        let losing: Vec<String> = rows
            .iter()
            .filter(|(_, han, intd)| pick(intd) >= pick(han))
            .map(|(seed, han, intd)| {
                format!("seed {seed}: {:.6} vs {:.6}", pick(intd), pick(han))
            })
            .collect();
        c.check(
            losing.is_empty(),
            format!(
                "intd {name} below han for all 10 seeds{}",
                if losing.is_empty() {
                    String::new()
                } else {
                    format!(" (failed {})", losing.join(", "))
                }
            ),
        );
    }
    c.check(
        elapsed.as_secs_f64() < 300.0,
        format!("sweep runtime {:.1} s < 300 s", elapsed.as_secs_f64()),
    );

    c.finish();
}

#[test]
fn arrival_phase_closed_form_oracle() {
    let mut c = Criterion::new(3, "saturated arrival closed form");

    let mut rng = Lcg(0x5eed_0003);
    let mut worst: f64 = 0.0;
    for r in [5.0, 26.5005, 100.0] {
        for _ in 0..20 {
            let z0 = TdState {
                z1: rng.range(-50.0, 50.0),
                z2: 0.0,
            };
            let sys = FnSystem::new(2, move |_t, x: &[f64], dx: &mut [f64]| {
                dx[0] = x[1];
                dx[1] = -r * r - r * x[1];
            });
            let horizon = 5.0 / r;
            let traj = integrate(
                &sys,
                &[z0.z1, z0.z2],
                [0.0, horizon],
                &tight(),
                horizon / 200.0,
            )
            .unwrap();
            for (i, row) in traj.states.iter().enumerate() {
                let t = i as f64 * traj.dt;
                let exact = arrival_solution(t, z0, r);
                worst = worst
                    .max((row[0] - exact.z1).abs())
                    .max((row[1] - exact.z2).abs());
            }
        }
    }
    c.check(
        worst < 1e-6,
        format!("max state error vs closed form = {worst:.3e} < 1e-6 (60 trajectories)"),
    );

    c.finish();
}

#[test]
fn lyapunov_descent_and_identity() {
    let mut c = Criterion::new(4, "energy descent under zero input");

    let p = IntdParams::default();
    let sys = FnSystem::new(2, move |_t, x: &[f64], dx: &mut [f64]| {
        let rate = intd_deriv(TdState { z1: x[0], z2: x[1] }, 0.0, &p);
        dx[0] = rate.z1;
        dx[1] = rate.z2;
    });
    let horizon = 20.0 / p.r;

    let mut rng = Lcg(0x5eed_0004);
    let mut monotone = true;
    let mut worst_rise = 0.0f64;
    let mut final_min = f64::INFINITY;
    let mut final_max = f64::NEG_INFINITY;
    for _ in 0..100 {
        let z0 = [rng.range(-10.0, 10.0), rng.range(-10.0, 10.0)];
        let traj = integrate(&sys, &z0, [0.0, horizon], &tight(), horizon / 2000.0).unwrap();
        let mut prev = f64::INFINITY;
        for row in &traj.states {
            let v = lyapunov_v(TdState { z1: row[0], z2: row[1] }, &p);
            if v > prev + 1e-8 {
                monotone = false;
                worst_rise = worst_rise.max(v - prev);
            }
            prev = v;
        }
        final_min = final_min.min(prev);
        final_max = final_max.max(prev);
    }
    c.check(
        monotone,
        format!("V nonincreasing between samples, slack 1e-8 (worst rise {worst_rise:.3e})"),
    );
    c.check(
        final_max < 1e-6,
        format!(
            "V at t = 20/R below 1e-6 for all starts (observed range [{final_min:.3e}, {final_max:.3e}])"
        ),
    );

    let mut rng = Lcg(0x5eed_0104);
    let mut worst_residual_rel = 0.0f64;
    for _ in 0..1000 {
        let state = TdState {
            z1: rng.range(-10.0, 10.0),
            z2: rng.range(-10.0, 10.0),
        };
        let (g1, g2) = lyapunov_grad(state, &p);
        let f = intd_deriv(state, 0.0, &p);
        let lhs = g1 * f.z1 + g2 * f.z2;
        let rhs = -p.r * state.z2 * state.z2;
        worst_residual_rel = worst_residual_rel.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
    }
    c.check(
        worst_residual_rel <= 1e-12,
        format!(
            "gradient identity residual {worst_residual_rel:.3e} <= 1e-12 (scaled by decay magnitude, 1000 states)"
        ),
    );

    c.finish();
}

#[test]
fn step_input_tracking_convergence() {
    let mut c = Criterion::new(5, "open-loop step tracking");

    let cfg = preset("case1_intd").unwrap();
    let result = run_open_loop_td(
        TdKind::Intd,
        &TdParams::Intd(cfg.intd),
        &cfg.reference,
        &cfg.noise,
        10.0,
        &cfg.integrator,
        1e-3,
    )
    .unwrap();

    let in_band =
        |i: usize| result.x1[i].abs() < 1e-3 && result.x2[i].abs() < 1e-3;
    let last_violation = (0..result.len()).rev().find(|i| !in_band(*i));
    match last_violation {
        None => c.check(true, "errors inside 1e-3 band from the start".into()),
        Some(i) => {
            let settle = (i + 1) as f64 * result.dt;
            c.check(
                i + 1 < result.len(),
                format!("both |e_t| and |e_d| enter 1e-3 band at t = {settle:.3} s and stay"),
            );
        }
    }
    let tail = result.len() - 1;
    c.check(
        result.x1[tail].abs() < 1e-3 && result.x2[tail].abs() < 1e-3,
        format!(
            "final errors e_t = {:.3e}, e_d = {:.3e} inside the band",
            result.x1[tail], result.x2[tail]
        ),
    );

    c.finish();
}

#[test]
fn bode_slopes_and_sinusoid_crosscheck() {
    let mut c = Criterion::new(6, "frequency-response slopes");

    let p = IntdParams::default();
    let ch = second_order_char(&p);

    let log_grid = |lo: f64, hi: f64, n: usize| -> (Vec<f64>, Vec<f64>) {
        let mut ws = Vec::with_capacity(n);
        let mut ms = Vec::with_capacity(n);
        for i in 0..n {
            let w = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
            ws.push(w);
            ms.push(bode_magnitude_db(w, &p));
        }
        (ws, ms)
    };
    let (low_w, low_m) = log_grid(ch.omega_n / 1000.0, ch.omega_n / 100.0, 50);
    let low = fit_slope_db_per_decade(&low_w, &low_m).unwrap();
    c.check(
        (low - 20.0).abs() < 0.5,
        format!("low-band slope {low:.3} dB/decade within 20 +- 0.5"),
    );
    let (high_w, high_m) = log_grid(10.0 * ch.omega_n, 1000.0 * ch.omega_n, 50);
    let high = fit_slope_db_per_decade(&high_w, &high_m).unwrap();
    c.check(
        (high + 20.0).abs() < 0.5,
        format!("high-band slope {high:.3} dB/decade within -20 +- 0.5"),
    );

    // Time-domain cross-check at omega_n / 100: drive the full nonlinear
    // dynamics with a unit sinusoid and project the derivative-channel
    // output onto the drive frequency over one settled period.
    let omega = ch.omega_n / 100.0;
    let period = 2.0 * std::f64::consts::PI / omega;
    let samples_per_period = 4096usize;
    let output_dt = period / samples_per_period as f64;
    let lead_in = (2.0 / output_dt).ceil() as usize;
    let total = lead_in + samples_per_period;
    let span = total as f64 * output_dt;
    let sys = FnSystem::new(2, move |t, x: &[f64], dx: &mut [f64]| {
        let rate = intd_deriv(TdState { z1: x[0], z2: x[1] }, (omega * t).sin(), &p);
        dx[0] = rate.z1;
        dx[1] = rate.z2;
    });
    let traj = integrate(&sys, &[0.0, 0.0], [0.0, span], &tight(), output_dt).unwrap();
    let mut quad_sin = 0.0;
    let mut quad_cos = 0.0;
    for k in 0..=samples_per_period {
        let i = lead_in + k;
        let t = i as f64 * output_dt;
        let weight = if k == 0 || k == samples_per_period { 0.5 } else { 1.0 };
        let z2 = traj.states[i][1];
        quad_sin += weight * z2 * (omega * t).sin();
        quad_cos += weight * z2 * (omega * t).cos();
    }
    let measured = 2.0 * output_dt / period * (quad_sin.powi(2) + quad_cos.powi(2)).sqrt();
    let analytic = 10f64.powf(bode_magnitude_db(omega, &p) / 20.0);
    c.check(
        (measured / analytic - 1.0).abs() < 0.02,
        format!(
            "sinusoid at omega_n/100: measured amplitude {measured:.6e} within 2% of analytic {analytic:.6e}"
        ),
    );

    c.finish();
}

#[test]
fn low_damping_peaking_and_natural_frequency() {
    let mut c = Criterion::new(7, "derivative-channel peaking at low damping");

    let p = IntdParams {
        beta: 100.0,
        gamma: 0.5,
        r: 10.0,
        ..IntdParams::default()
    };
    let ch = second_order_char(&p);
    c.check(
        within(ch.xi, 0.03535533905932738, 1e-12),
        format!("damping ratio xi = {:.6} in the peaking regime", ch.xi),
    );

    // A unit step on the derivative channel is a unit-slope ramp on the
    // input channel.
    let sys = FnSystem::new(2, move |t, x: &[f64], dx: &mut [f64]| {
        let rate = intd_deriv(TdState { z1: x[0], z2: x[1] }, t, &p);
        dx[0] = rate.z1;
        dx[1] = rate.z2;
    });
    let traj = integrate(&sys, &[0.0, 0.0], [0.0, 1.0], &tight(), 1e-4).unwrap();
    let peak = traj
        .states
        .iter()
        .map(|row| row[1])
        .fold(f64::NEG_INFINITY, f64::max);
    let settled = traj.last()[1];
    let overshoot = (peak - settled) / settled;
    c.check(
        overshoot > 0.20,
        format!(
            "derivative estimate overshoots settled value by {:.1}% > 20%",
            overshoot * 100.0
        ),
    );

    let equal_shape = IntdParams {
        beta: 7.25,
        gamma: 7.25,
        r: 26.5005,
        ..IntdParams::default()
    };
    let eq_ch = second_order_char(&equal_shape);
    c.check(
        eq_ch.omega_n == equal_shape.r,
        format!(
            "omega_n = {} equals R = {} exactly when beta = gamma",
            eq_ch.omega_n, equal_shape.r
        ),
    );

    c.finish();
}

#[test]
fn unit_property_and_replay_suite() {
    let mut c = Criterion::new(8, "unit and replay suite");

    // fal continuity, oddness, monotonicity at the controller's three
    // shaping pairs.
    let nlpid = NlpidParams::default();
    let mut fal_ok = true;
    let mut details = Vec::new();
    for term in [nlpid.p_term, nlpid.d_term, nlpid.i_term] {
        let (alpha, delta) = (term.alpha, term.delta);
        let inner = delta / delta.powf(1.0 - alpha);
        let outer = delta.powf(alpha);
        let branch_gap = (inner - outer).abs() / outer;
        if branch_gap >= 1e-12 {
            fal_ok = false;
        }
        let slope_bound = (1.0 + alpha) * delta.powf(alpha - 1.0);
        for eps in [1e-9, 1e-12] {
            let gap = (fal(delta - eps, alpha, delta) - fal(delta + eps, alpha, delta)).abs();
            if gap > slope_bound * 2.0 * eps + 1e-15 {
                fal_ok = false;
            }
        }
        details.push(format!("({alpha}, {delta}) gap {branch_gap:.1e}"));
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=400 {
            let e = -2.0 + i as f64 * 0.01;
            let value = fal(e, alpha, delta);
            if (fal(-e, alpha, delta) + value).abs() > 1e-15 {
                fal_ok = false;
            }
            if value <= prev {
                fal_ok = false;
            }
            prev = value;
        }
    }
    c.check(
        fal_ok,
        format!("fal continuous, odd, strictly increasing at {}", details.join(", ")),
    );

    let delta = 0.0005;
    let sat_gap = (sat(delta * (1.0 - 1e-9), delta) - sat(delta * (1.0 + 1e-9), delta)).abs();
    c.check(
        sat(delta, delta) == 1.0 && sat(-delta, delta) == -1.0 && sat_gap < 1e-8,
        format!("sat continuous at the band edge (gap {sat_gap:.1e})"),
    );

    let plant = NmsdParams::default();
    let coeff = (plant.d * plant.c1 + plant.c3 - 0.02).abs();
    let mut worst_state_gap = 0.0f64;
    let mut rng = Lcg(0x5eed_0008);
    for _ in 0..100 {
        let state = PlantState {
            x1: rng.range(-1.5, 1.5),
            x2: rng.range(-1.5, 1.5),
        };
        let u = rng.range(-3.0, 3.0);
        let g = nmsd_deriv_general(state, u, &plant);
        let f = nmsd_deriv(state, u);
        worst_state_gap = worst_state_gap.max((g.x2 - f.x2).abs()).max((g.x1 - f.x1).abs());
    }
    c.check(
        coeff <= 1e-15 && worst_state_gap <= 1e-15,
        format!(
            "general plant form matches folded form (coefficient gap {coeff:.1e}, state gap {worst_state_gap:.1e})"
        ),
    );

    // Fourth-order convergence of the fixed-step integrator.
    let sys = FnSystem::new(1, |_t, x: &[f64], dx: &mut [f64]| dx[0] = -x[0]);
    let error_at = |dt: f64| {
        let cfg = IntegratorConfig {
            method: Method::Rk4Fixed,
            dt,
            ..IntegratorConfig::default()
        };
        let traj = integrate(&sys, &[1.0], [0.0, 1.0], &cfg, 1.0).unwrap();
        (traj.last()[0] - (-1.0f64).exp()).abs()
    };
    let ratio = error_at(0.05) / error_at(0.025);
    c.check(
        (8.0..=32.0).contains(&ratio),
        format!("fixed-step error ratio {ratio:.1} on halving consistent with order 4"),
    );

    // Byte-identical CSV replay through the binary.
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let output = Command::new(env!("CARGO_BIN_EXE_tdsim"))
            .args(["run", "--preset", "case2_intd", "--out"])
            .arg(dir.path())
            .env_remove("TDSIM_CSV_PRECISION")
            .output()
            .unwrap();
        assert!(output.status.success());
    }
    let read = |dir: &tempfile::TempDir, name: &str| {
        std::fs::read(dir.path().join(name)).unwrap()
    };
    let replay_ok = read(&dir_a, "case2_intd_trajectory.csv")
        == read(&dir_b, "case2_intd_trajectory.csv")
        && read(&dir_a, "case2_intd_metrics.txt") == read(&dir_b, "case2_intd_metrics.txt");
    c.check(replay_ok, "rerun produces byte-identical CSV and metrics".into());

    c.finish();
}
