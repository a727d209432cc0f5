//! Simulation engine: advances the full switched plant between control
//! boundaries, drives the controller, and produces traces. Also provides the
//! high-resolution oracle run and the seeded open-loop gate sequence used
//! for model verification.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::controller::{
    Controller, ControllerGains, Measurements, ReferenceMode, ReferenceSchedule,
};
use crate::error::{Error, Result};
use crate::model::{arm_voltages, full_model_derivative, sum_diff_transform, FullState, SwitchCommand};
use crate::params::{ConverterParams, Mat2};
use crate::trace::{Trace, TraceRow};

/// Any state magnitude beyond this aborts the run as diverged.
pub const DIVERGENCE_GUARD: f64 = 1e9;

/// Inner substeps per control period for the standard run.
pub const DEFAULT_SUBSTEPS: usize = 10;

/// How the plant is advanced between control boundaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlantIntegrator {
    /// Fourth-order Runge-Kutta at Ts divided by the substep count.
    Rk4InnerStep,
    /// A single explicit Euler step per control period.
    EulerTs,
}

/// Complete description of one closed-loop run.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub params: ConverterParams,
    pub gains: ControllerGains,
    pub schedule: ReferenceSchedule,
    pub duration: f64,
    pub initial: FullState,
    pub reference_mode: ReferenceMode,
    pub integrator: PlantIntegrator,
    /// Reserved; the simulation itself is deterministic.
    pub seed: u64,
}

impl Scenario {
    /// The 3.5 s closed-loop study with optimal reference generation.
    pub fn table2() -> Self {
        let params = ConverterParams::table2();
        Self {
            params,
            gains: ControllerGains::table2(),
            schedule: ReferenceSchedule::table2(params.omega),
            duration: 3.5,
            initial: FullState::uniform(params.n, 31.25),
            reference_mode: ReferenceMode::Optimal,
            integrator: PlantIntegrator::Rk4InnerStep,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate_for_control()?;
        self.gains.validate(self.params.n)?;
        self.schedule.validate()?;
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return Err(Error::Config(format!(
                "duration must be nonnegative, got {}",
                self.duration
            )));
        }
        self.initial.check_dims(self.params.n)?;
        Ok(())
    }
}

fn add_scaled(s: &FullState, d: &FullState, h: f64) -> FullState {
    FullState {
        vc: s.vc.iter().zip(&d.vc).map(|(a, b)| a + b * h).collect(),
        i1: s.i1 + d.i1 * h,
        i2: s.i2 + d.i2 * h,
    }
}

/// One classical RK4 step of the full switched model with gates held.
pub fn rk4_step(
    params: &ConverterParams,
    l_inv: &Mat2,
    state: &FullState,
    cmd: &SwitchCommand,
    t: f64,
    h: f64,
) -> Result<FullState> {
    let k1 = full_model_derivative(params, l_inv, state, cmd, params.va(t))?;
    let s2 = add_scaled(state, &k1, h / 2.0);
    let k2 = full_model_derivative(params, l_inv, &s2, cmd, params.va(t + h / 2.0))?;
    let s3 = add_scaled(state, &k2, h / 2.0);
    let k3 = full_model_derivative(params, l_inv, &s3, cmd, params.va(t + h / 2.0))?;
    let s4 = add_scaled(state, &k3, h);
    let k4 = full_model_derivative(params, l_inv, &s4, cmd, params.va(t + h))?;
    let mut out = state.clone();
    for i in 0..out.vc.len() {
        out.vc[i] += h / 6.0 * (k1.vc[i] + 2.0 * k2.vc[i] + 2.0 * k3.vc[i] + k4.vc[i]);
    }
    out.i1 += h / 6.0 * (k1.i1 + 2.0 * k2.i1 + 2.0 * k3.i1 + k4.i1);
    out.i2 += h / 6.0 * (k1.i2 + 2.0 * k2.i2 + 2.0 * k3.i2 + k4.i2);
    Ok(out)
}

/// Advance the plant over one control period [t, t + Ts) with fixed gates.
pub fn integrate_hold(
    params: &ConverterParams,
    l_inv: &Mat2,
    state: &FullState,
    cmd: &SwitchCommand,
    t: f64,
    integrator: PlantIntegrator,
    substeps: usize,
) -> Result<FullState> {
    match integrator {
        PlantIntegrator::EulerTs => {
            let d = full_model_derivative(params, l_inv, state, cmd, params.va(t))?;
            Ok(add_scaled(state, &d, params.ts))
        }
        PlantIntegrator::Rk4InnerStep => {
            let h = params.ts / substeps as f64;
            let mut s = state.clone();
            for k in 0..substeps {
                s = rk4_step(params, l_inv, &s, cmd, t + k as f64 * h, h)?;
            }
            Ok(s)
        }
    }
}

fn check_divergence(state: &FullState, step: usize, time: f64) -> Result<()> {
    let worst_vc = state
        .vc
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap());
    let mut candidates = vec![("i1".to_string(), state.i1), ("i2".to_string(), state.i2)];
    if let Some((i, &v)) = worst_vc {
        candidates.push((format!("vc{i}"), v));
    }
    for (signal, value) in candidates {
        if !value.is_finite() || value.abs() > DIVERGENCE_GUARD {
            return Err(Error::Diverged {
                step,
                time,
                signal,
                value,
            });
        }
    }
    Ok(())
}

/// Stored energy: capacitive plus magnetic (through the coupled inductance
/// matrix). Used by the passivity checks.
pub fn stored_energy(params: &ConverterParams, state: &FullState) -> f64 {
    let cap: f64 = state.vc.iter().map(|v| 0.5 * params.c * v * v).sum();
    let l = params.inductance_matrix();
    let li = l.mul_vec([state.i1, state.i2]);
    cap + 0.5 * (state.i1 * li[0] + state.i2 * li[1])
}

fn row_from_state(
    params: &ConverterParams,
    t: f64,
    state: &FullState,
    cmd: &SwitchCommand,
) -> Result<TraceRow> {
    let (v1, v2) = arm_voltages(params, cmd, &state.vc)?;
    let (is, id) = sum_diff_transform(state.i1, state.i2);
    Ok(TraceRow {
        t,
        i1: state.i1,
        i2: state.i2,
        is,
        id,
        v1,
        v2,
        vc: state.vc.clone(),
        vc1_bar: state.vc1_mean(),
        vc2_bar: state.vc2_mean(),
        vc12_des: 0.0,
        ia_des: 0.0,
        id_des: 0.0,
        n1: cmd.n1,
        n2: cmd.n2,
        objective: 0.0,
    })
}

/// Run the plant open-loop under a per-period gate sequence.
///
/// The trace has one row per gate command plus a final row for the end
/// state (held under the last command's voltage).
pub fn run_gate_sequence(
    params: &ConverterParams,
    gates: &[SwitchCommand],
    initial: &FullState,
    substeps: usize,
) -> Result<Trace> {
    params.validate()?;
    initial.check_dims(params.n)?;
    let l_inv = params.inductance_inverse()?;
    let mut trace = Trace::new(params.n, params.ts);
    let mut state = initial.clone();
    let hold = SwitchCommand::all_bypassed(params.n);
    for (k, cmd) in gates.iter().enumerate() {
        let t = k as f64 * params.ts;
        check_divergence(&state, k, t)?;
        trace.rows.push(row_from_state(params, t, &state, cmd)?);
        state = integrate_hold(
            params,
            &l_inv,
            &state,
            cmd,
            t,
            PlantIntegrator::Rk4InnerStep,
            substeps,
        )?;
    }
    let t_end = gates.len() as f64 * params.ts;
    check_divergence(&state, gates.len(), t_end)?;
    trace
        .rows
        .push(row_from_state(params, t_end, &state, gates.last().unwrap_or(&hold))?);
    Ok(trace)
}

/// Open-loop run at the standard inner resolution.
pub fn run_open_loop(
    params: &ConverterParams,
    gates: &[SwitchCommand],
    initial: &FullState,
) -> Result<Trace> {
    run_gate_sequence(params, gates, initial, DEFAULT_SUBSTEPS)
}

/// Reference trajectory at `refinement` inner steps per control period.
pub fn run_oracle(
    params: &ConverterParams,
    gates: &[SwitchCommand],
    initial: &FullState,
    refinement: usize,
) -> Result<Trace> {
    if refinement < 10 {
        return Err(Error::InvalidInput(format!(
            "oracle refinement must be at least 10, got {refinement}"
        )));
    }
    run_gate_sequence(params, gates, initial, refinement)
}

/// Deterministic pseudorandom gate sequence for open-loop verification.
///
/// The total insertion count dithers around 2 Vdc / vc_nominal so the
/// circulating voltage stays centered and the trajectory remains bounded;
/// the split between arms and the capacitor subsets are drawn from a seeded
/// generator.
pub fn seeded_gate_sequence(
    params: &ConverterParams,
    vc_nominal: f64,
    steps: usize,
    seed: u64,
) -> Result<Vec<SwitchCommand>> {
    if !(vc_nominal > 0.0) {
        return Err(Error::InvalidInput(format!(
            "nominal capacitor voltage must be positive, got {vc_nominal}"
        )));
    }
    let n = params.n;
    let target = (2.0 * params.vdc / vc_nominal).min(2.0 * n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0f64;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        acc += target;
        let s = (acc.floor() as usize).min(2 * n);
        acc -= s as f64;
        let lo = s.saturating_sub(n);
        let hi = s.min(n);
        let n1 = rng.gen_range(lo..=hi);
        let n2 = s - n1;
        let mut gates = vec![false; 2 * n];
        for i in rand::seq::index::sample(&mut rng, n, n1) {
            gates[i] = true;
        }
        for i in rand::seq::index::sample(&mut rng, n, n2) {
            gates[n + i] = true;
        }
        out.push(SwitchCommand { gates, n1, n2 });
    }
    Ok(out)
}

/// Maximum absolute differences between two traces of equal shape.
#[derive(Clone, Copy, Debug, Default)]
pub struct TraceDeviation {
    pub vc: f64,
    pub current: f64,
    pub arm_voltage: f64,
}

pub fn compare_traces(a: &Trace, b: &Trace) -> Result<TraceDeviation> {
    if a.rows.len() != b.rows.len() || a.n != b.n {
        return Err(Error::InvalidInput(format!(
            "trace shapes differ: {} x {} vs {} x {}",
            a.rows.len(),
            a.n,
            b.rows.len(),
            b.n
        )));
    }
    let mut d = TraceDeviation::default();
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        for (va, vb) in ra.vc.iter().zip(&rb.vc) {
            d.vc = d.vc.max((va - vb).abs());
        }
        d.current = d
            .current
            .max((ra.i1 - rb.i1).abs())
            .max((ra.i2 - rb.i2).abs());
        d.arm_voltage = d
            .arm_voltage
            .max((ra.v1 - rb.v1).abs())
            .max((ra.v2 - rb.v2).abs());
    }
    Ok(d)
}

/// Run the full closed-loop scenario.
///
/// Each row holds the state sampled at the control boundary together with
/// the command and references computed from that sample; the plant then
/// advances one period under the held gates.
pub fn run_closed_loop(scenario: &Scenario) -> Result<Trace> {
    scenario.validate()?;
    let params = scenario.params;
    let l_inv = params.inductance_inverse()?;
    let steps = (scenario.duration / params.ts).round() as usize;
    let mut controller = Controller::new(
        params,
        scenario.gains,
        scenario.schedule.clone(),
        scenario.reference_mode,
        scenario.initial.vc1_mean(),
    )?;
    let mut state = scenario.initial.clone();
    let mut trace = Trace::new(params.n, params.ts);
    for k in 0..=steps {
        let t = k as f64 * params.ts;
        check_divergence(&state, k, t)?;
        let meas = Measurements {
            i1: state.i1,
            i2: state.i2,
            vc1_bar: state.vc1_mean(),
            vc2_bar: state.vc2_mean(),
        };
        let out = controller.step(t, &meas, &state.vc)?;
        let cmd = SwitchCommand::from_gates(out.gates)?;
        let mut row = row_from_state(&params, t, &state, &cmd)?;
        row.vc12_des = out.vc12_des;
        row.ia_des = out.ia_des;
        row.id_des = out.id_des;
        row.objective = out.objective;
        trace.rows.push(row);
        if k < steps {
            state = integrate_hold(
                &params,
                &l_inv,
                &state,
                &cmd,
                t,
                scenario.integrator,
                DEFAULT_SUBSTEPS,
            )?;
        }
    }
    Ok(trace)
}
