//! Three-layer control: per-arm capacitor balancing, adaptive generation of
//! the desired circulating current and optimal voltage reference, and the
//! windowed predictive selection of the insertion counts (n1, n2).

use crate::error::{Error, Result};
use crate::harmonic::{
    self, alpha_lr, c0_and_vd0_bounds, feedforward_f, normalize_phase, p20_closed_form,
    HarmonicSpec, Sinusoid,
};
use crate::model::{arm_voltages_average, sum_diff_transform};
use crate::params::{ConverterParams, Mat2};

/// Control gains and predictive-selection weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControllerGains {
    /// Pair-difference gain [V per V^2].
    pub kd_m: f64,
    /// Pair-sum gain [V per V^2].
    pub kd0: f64,
    /// Measurement filter time constant [s].
    pub tau: f64,
    /// Load-current error weight.
    pub alpha1: f64,
    /// Circulating-current error weight.
    pub alpha2: f64,
    /// Window half-width for the level search.
    pub wn: usize,
}

impl ControllerGains {
    /// Gains used in the closed-loop simulation study.
    pub fn table2() -> Self {
        Self {
            kd_m: 1.5e-3,
            kd0: 0.1e-3,
            tau: 0.0318,
            alpha1: 0.99,
            alpha2: 0.01,
            wn: 1,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if self.alpha1 < 0.0 || self.alpha2 < 0.0 {
            return Err(Error::Config("alpha1 and alpha2 must be nonnegative".into()));
        }
        if (self.alpha1 + self.alpha2 - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "alpha1 + alpha2 must equal 1, got {}",
                self.alpha1 + self.alpha2
            )));
        }
        if self.wn > n {
            return Err(Error::Config(format!(
                "window half-width wn = {} exceeds n = {n}",
                self.wn
            )));
        }
        Ok(())
    }
}

/// Piecewise-constant amplitude schedule for the desired load current.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSchedule {
    /// (start time [s], amplitude [A]) entries, first at t = 0.
    pub entries: Vec<(f64, f64)>,
    pub omega: f64,
}

impl ReferenceSchedule {
    pub fn constant(amplitude: f64, omega: f64) -> Self {
        Self {
            entries: vec![(0.0, amplitude)],
            omega,
        }
    }

    /// The simulation study schedule: 1.5 A, then 9 A, then 0.75 A.
    pub fn table2(omega: f64) -> Self {
        Self {
            entries: vec![(0.0, 1.5), (1.4, 9.0), (2.6, 0.75)],
            omega,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::Config("schedule must have at least one entry".into()));
        }
        if self.entries[0].0 != 0.0 {
            return Err(Error::Config(format!(
                "schedule must start at t = 0, got {}",
                self.entries[0].0
            )));
        }
        for w in self.entries.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Config(
                    "schedule start times must be strictly increasing".into(),
                ));
            }
        }
        if self.entries.iter().any(|&(_, a)| a < 0.0) {
            return Err(Error::Config("schedule amplitudes must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn amplitude_at(&self, t: f64) -> f64 {
        let mut a = self.entries[0].1;
        for &(start, amp) in &self.entries {
            if t >= start {
                a = amp;
            } else {
                break;
            }
        }
        a
    }

    /// Desired load current at time t (phase is never reset).
    pub fn ia_des(&self, t: f64) -> f64 {
        self.amplitude_at(t) * (self.omega * t).sin()
    }

    pub fn max_amplitude(&self) -> f64 {
        self.entries.iter().map(|&(_, a)| a).fold(0.0, f64::max)
    }
}

/// Which arm a balancing decision applies to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arm {
    Upper,
    Lower,
}

/// Pick the nj capacitors to insert in one arm.
///
/// Upper arm: a positive arm current charges inserted capacitors, so insert
/// the lowest voltages; negative current inserts the highest. The lower arm
/// uses the opposite ordering. Equal voltages break ties by capacitor index.
pub fn balance_arm(arm: Arm, ij: f64, vcj: &[f64], nj: usize) -> Result<Vec<bool>> {
    if nj > vcj.len() {
        return Err(Error::InvalidInput(format!(
            "insertion count {nj} exceeds arm size {}",
            vcj.len()
        )));
    }
    let ascending = match arm {
        Arm::Upper => ij > 0.0,
        Arm::Lower => ij <= 0.0,
    };
    let mut order: Vec<usize> = (0..vcj.len()).collect();
    // Stable sort keeps index order for equal voltages.
    if ascending {
        order.sort_by(|&a, &b| vcj[a].partial_cmp(&vcj[b]).unwrap());
    } else {
        order.sort_by(|&a, &b| vcj[b].partial_cmp(&vcj[a]).unwrap());
    }
    let mut gates = vec![false; vcj.len()];
    for &i in order.iter().take(nj) {
        gates[i] = true;
    }
    Ok(gates)
}

/// Exact zero-order-hold discretization of a first-order low-pass filter.
pub fn filter_step(y: f64, u: f64, ts: f64, tau: f64) -> f64 {
    y + (1.0 - (-ts / tau).exp()) * (u - y)
}

/// Pair-difference loop: VdM = KdM (Vc1f^2 - Vc2f^2), IdM = VdM / |Z|.
pub fn loop1_id_m(gains: &ControllerGains, vc1f: f64, vc2f: f64, params: &ConverterParams) -> (f64, f64) {
    let vd_m = gains.kd_m * (vc1f * vc1f - vc2f * vc2f);
    (vd_m, vd_m / params.arm_impedance())
}

/// Pair-sum loop: Vd0 = Vd0- + Kd0 (Vc12des^2 - Vc12mis^2), Id0 = Vd0 / R.
pub fn loop2_id0(
    gains: &ControllerGains,
    vc12_des: f64,
    vc1f: f64,
    vc2f: f64,
    vd0_minus: f64,
    params: &ConverterParams,
) -> (f64, f64) {
    let vc12_mis = (vc1f + vc2f) / 2.0;
    let vd0 = vd0_minus + gains.kd0 * (vc12_des * vc12_des - vc12_mis * vc12_mis);
    (vd0, vd0 / params.r)
}

/// Parameters of the desired circulating current and its driving voltage.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IdSpec {
    pub id0: f64,
    pub id_m: f64,
    pub vd0: f64,
    pub vd_m: f64,
    /// Chosen circulating-voltage phase (= -gamma).
    pub alpha_vd: f64,
    /// Current phase alphaVd - alphaLR.
    pub phase: f64,
}

impl IdSpec {
    /// Desired circulating current at time t.
    pub fn id_des(&self, omega: f64, t: f64) -> f64 {
        self.id0 + self.id_m * (omega * t + self.phase).sin()
    }

    /// Voltage Vd(t) that holds Id on the desired profile, evaluated
    /// analytically: L dId/dt + R Id = Vd0 + VdM sin(wt + alphaVd).
    pub fn vd_des(&self, params: &ConverterParams, t: f64) -> f64 {
        let wt = params.omega * t + self.phase;
        params.l * self.id_m * params.omega * wt.cos()
            + params.r * (self.id0 + self.id_m * wt.sin())
    }
}

/// Optimal average capacitor voltage reference.
///
/// Splits the desired sum voltage f(t) and difference voltage Vd(t) into the
/// per-arm references V1, V2, finds their maxima over one period by dense
/// sampling and maps the mean maximum through the full-insertion level.
pub fn optimal_reference(
    params: &ConverterParams,
    f: &Sinusoid,
    vd_des: impl Fn(f64) -> f64,
) -> f64 {
    const SAMPLES: usize = 2048;
    let period = 2.0 * std::f64::consts::PI / params.omega;
    let mut v1_max = f64::NEG_INFINITY;
    let mut v2_max = f64::NEG_INFINITY;
    for k in 0..SAMPLES {
        let t = k as f64 * period / SAMPLES as f64;
        let vs = f.eval(t);
        let vd = vd_des(t);
        v1_max = v1_max.max((vs + vd) / 2.0);
        v2_max = v2_max.max((vs - vd) / 2.0);
    }
    let v12_max = (v1_max + v2_max) / 2.0;
    (v12_max + params.vdc) / params.n as f64
}

/// One-step forward-Euler prediction of the current errors under a
/// candidate (n1, n2).
#[allow(clippy::too_many_arguments)]
pub fn predict_errors(
    params: &ConverterParams,
    l_inv: &Mat2,
    i1: f64,
    i2: f64,
    vc1_bar: f64,
    vc2_bar: f64,
    va_k: f64,
    ia_des_next: f64,
    id_des_next: f64,
    n1: usize,
    n2: usize,
) -> (f64, f64) {
    let (v1, v2) = arm_voltages_average(params, n1, n2, vc1_bar, vc2_bar);
    let a = params.resistance_matrix();
    let ri = a.mul_vec([i1, i2]);
    let di = l_inv.mul_vec([ri[0] + v1 - va_k, ri[1] + v2 - va_k]);
    let i1_next = i1 + di[0] * params.ts;
    let i2_next = i2 + di[1] * params.ts;
    let (is_next, id_next) = sum_diff_transform(i1_next, i2_next);
    (ia_des_next - is_next, id_des_next - id_next)
}

/// Inputs needed to evaluate one candidate pair in the level search.
#[derive(Clone, Copy, Debug)]
pub struct PredictionInputs {
    pub i1: f64,
    pub i2: f64,
    pub vc1_bar: f64,
    pub vc2_bar: f64,
    pub va_k: f64,
    pub ia_des_next: f64,
    pub id_des_next: f64,
}

/// Windowed argmin of J = alpha1 eIa^2 + alpha2 eId^2.
///
/// Candidates are the window around the previous pair clamped to [0, n].
/// Ties break on smallest switching effort, then smallest n1, then n2.
///
/// The quadratic penalty matters for robustness: with a linear penalty the
/// small alpha2 weight lets the predicted circulating-current error drift by
/// several amperes whenever the two arm means separate (the level lattice
/// then prices every corrective move above its weighted benefit), and a
/// large load step can leave the loop in a permanent limit cycle. Squaring
/// makes the marginal cost of eId grow with the excursion, which caps the
/// drift at a fraction of an ampere while leaving the small-error behavior
/// dominated by the load-current term as intended.
pub fn select_levels(
    params: &ConverterParams,
    l_inv: &Mat2,
    gains: &ControllerGains,
    inputs: &PredictionInputs,
    n1_prev: usize,
    n2_prev: usize,
) -> (usize, usize, f64) {
    let n = params.n;
    let window = |prev: usize| {
        let lo = prev.saturating_sub(gains.wn);
        let hi = (prev + gains.wn).min(n);
        lo..=hi
    };
    let mut best: Option<(f64, usize, usize, usize)> = None;
    for n1 in window(n1_prev) {
        for n2 in window(n2_prev) {
            let (e_ia, e_id) = predict_errors(
                params,
                l_inv,
                inputs.i1,
                inputs.i2,
                inputs.vc1_bar,
                inputs.vc2_bar,
                inputs.va_k,
                inputs.ia_des_next,
                inputs.id_des_next,
                n1,
                n2,
            );
            let j = gains.alpha1 * e_ia * e_ia + gains.alpha2 * e_id * e_id;
            let effort = n1.abs_diff(n1_prev) + n2.abs_diff(n2_prev);
            let key = (j, effort, n1, n2);
            let better = match &best {
                None => true,
                Some(b) => key < *b,
            };
            if better {
                best = Some(key);
            }
        }
    }
    let (j, _, n1, n2) = best.expect("window is never empty");
    (n1, n2, j)
}

/// Mutable controller memory advanced once per control period.
#[derive(Clone, Debug)]
pub struct ControllerState {
    pub vc1f: f64,
    pub vc2f: f64,
    pub n1_prev: usize,
    pub n2_prev: usize,
    pub vc12_des: f64,
    pub id_spec: IdSpec,
    pub vd0_minus: f64,
    last_amplitude: Option<f64>,
}

impl ControllerState {
    pub fn new(vc1f: f64, vc2f: f64) -> Self {
        Self {
            vc1f,
            vc2f,
            n1_prev: 0,
            n2_prev: 0,
            vc12_des: 0.0,
            id_spec: IdSpec::default(),
            vd0_minus: 0.0,
            last_amplitude: None,
        }
    }
}

/// How the average-voltage reference is produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferenceMode {
    /// Recomputed whenever the amplitude schedule changes.
    Optimal,
    /// Held at a fixed value for the whole run.
    Constant(f64),
}

/// Measurements sampled at the start of a control period.
#[derive(Clone, Copy, Debug)]
pub struct Measurements {
    pub i1: f64,
    pub i2: f64,
    pub vc1_bar: f64,
    pub vc2_bar: f64,
}

/// Gate commands plus diagnostics logged into the trace.
#[derive(Clone, Debug)]
pub struct ControlOutput {
    pub n1: usize,
    pub n2: usize,
    pub gates: Vec<bool>,
    pub objective: f64,
    pub ia_des: f64,
    pub id_des: f64,
    pub vc12_des: f64,
}

/// Full controller pipeline for one control period.
pub struct Controller {
    pub params: ConverterParams,
    pub gains: ControllerGains,
    pub schedule: ReferenceSchedule,
    pub mode: ReferenceMode,
    l_inv: Mat2,
    pub state: ControllerState,
}

impl Controller {
    pub fn new(
        params: ConverterParams,
        gains: ControllerGains,
        schedule: ReferenceSchedule,
        mode: ReferenceMode,
        initial_vc: f64,
    ) -> Result<Self> {
        params.validate_for_control()?;
        gains.validate(params.n)?;
        schedule.validate()?;
        if (schedule.omega - params.omega).abs() > 1e-9 * params.omega {
            return Err(Error::Config(format!(
                "schedule frequency {} differs from the converter frequency {}; a separate \
                 load-source frequency is not supported",
                schedule.omega, params.omega
            )));
        }
        let l_inv = params.inductance_inverse()?;
        let mut state = ControllerState::new(initial_vc, initial_vc);
        // Neutral starting level: roughly half insertion on both arms.
        state.n1_prev = params.n / 2;
        state.n2_prev = params.n.div_ceil(2);
        Ok(Self {
            params,
            gains,
            schedule,
            mode,
            l_inv,
            state,
        })
    }

    /// Execute one control period at time `t` and return the gate command.
    pub fn step(&mut self, t: f64, meas: &Measurements, vcs: &[f64]) -> Result<ControlOutput> {
        let p = &self.params;
        let n = p.n;
        let ts = p.ts;
        let st = &mut self.state;

        // 1. Filters.
        st.vc1f = filter_step(st.vc1f, meas.vc1_bar, ts, self.gains.tau);
        st.vc2f = filter_step(st.vc2f, meas.vc2_bar, ts, self.gains.tau);

        // 2. Loop 1: pair difference.
        let ia_m = self.schedule.amplitude_at(t);
        let f = feedforward_f(p, ia_m, p.va_m, p.alpha_va);
        let (vd_m, id_m) = loop1_id_m(&self.gains, st.vc1f, st.vc2f, p);

        // 3. Phase choice alphaVd = -gamma and the P10 boundary Vd0-.
        let probe = HarmonicSpec {
            vd0: 0.0,
            vd_m,
            alpha_vd: 0.0,
            ia_m,
            va_m: p.va_m,
            alpha_va: p.alpha_va,
            omega: p.omega,
        };
        let (_, _, gamma, _) = p20_closed_form(p, &probe, &f);
        let alpha_vd = normalize_phase(-gamma);
        match c0_and_vd0_bounds(p, &probe, &f) {
            Ok((_, vd0_minus, _)) => st.vd0_minus = vd0_minus,
            // Infeasible operating point: hold the last feasible boundary.
            Err(Error::InfeasibleOperatingPoint { .. }) => {}
            Err(e) => return Err(e),
        }

        // 4. Reference, recomputed when the amplitude schedule changes.
        match self.mode {
            ReferenceMode::Constant(v) => st.vc12_des = v,
            ReferenceMode::Optimal => {
                if st.last_amplitude != Some(ia_m) {
                    let prev = st.id_spec;
                    let vd_prev = IdSpec {
                        vd0: if st.last_amplitude.is_none() {
                            st.vd0_minus
                        } else {
                            prev.vd0
                        },
                        ..prev
                    };
                    let id0 = vd_prev.vd0 / p.r;
                    let spec = IdSpec {
                        id0,
                        id_m,
                        vd0: vd_prev.vd0,
                        vd_m,
                        alpha_vd,
                        phase: normalize_phase(alpha_vd - alpha_lr(p)),
                    };
                    st.vc12_des = optimal_reference(p, &f, |tt| spec.vd_des(p, tt));
                }
            }
        }
        st.last_amplitude = Some(ia_m);

        // 5. Loop 2: pair sum.
        let (vd0, id0) = loop2_id0(
            &self.gains,
            st.vc12_des,
            st.vc1f,
            st.vc2f,
            st.vd0_minus,
            p,
        );

        st.id_spec = IdSpec {
            id0,
            id_m,
            vd0,
            vd_m,
            alpha_vd,
            phase: normalize_phase(alpha_vd - alpha_lr(p)),
        };

        // 6. Predictive level selection for the next period.
        let t_next = t + ts;
        let ia_des_next = self.schedule.ia_des(t_next);
        let id_des_next = st.id_spec.id_des(p.omega, t_next);
        let inputs = PredictionInputs {
            i1: meas.i1,
            i2: meas.i2,
            vc1_bar: meas.vc1_bar,
            vc2_bar: meas.vc2_bar,
            va_k: p.va(t),
            ia_des_next,
            id_des_next,
        };
        let (n1, n2, objective) = select_levels(
            p,
            &self.l_inv,
            &self.gains,
            &inputs,
            st.n1_prev,
            st.n2_prev,
        );
        st.n1_prev = n1;
        st.n2_prev = n2;

        // 7. Balancing: choose which capacitors realize the levels.
        let mut gates = balance_arm(Arm::Upper, meas.i1, &vcs[..n], n1)?;
        gates.extend(balance_arm(Arm::Lower, meas.i2, &vcs[n..], n2)?);

        Ok(ControlOutput {
            n1,
            n2,
            gates,
            objective,
            ia_des: self.schedule.ia_des(t),
            id_des: st.id_spec.id_des(p.omega, t),
            vc12_des: st.vc12_des,
        })
    }
}

/// Reference value used by the constant mode: the optimal reference at the
/// most demanding schedule amplitude, with the circulating voltage at its
/// boundary design point.
pub fn constant_reference_for(params: &ConverterParams, ia_m: f64) -> Result<f64> {
    params.validate_for_control()?;
    let f = feedforward_f(params, ia_m, params.va_m, params.alpha_va);
    let probe = HarmonicSpec {
        vd0: 0.0,
        vd_m: 0.0,
        alpha_vd: 0.0,
        ia_m,
        va_m: params.va_m,
        alpha_va: params.alpha_va,
        omega: params.omega,
    };
    let (_, vd0_minus, _) = c0_and_vd0_bounds(params, &probe, &f)?;
    let spec = IdSpec {
        id0: vd0_minus / params.r,
        id_m: 0.0,
        vd0: vd0_minus,
        vd_m: 0.0,
        alpha_vd: 0.0,
        phase: 0.0,
    };
    Ok(optimal_reference(params, &f, |t| spec.vd_des(params, t)))
}

// Re-export used by the harmonic-analysis CLI path.
pub use harmonic::analyze as harmonic_analyze;
