//! Plant mathematics: the full switched state-space model, the averaged
//! capacitive model, the sum/difference transform and the squared-voltage
//! nonlinear dynamics.
//!
//! State ordering follows the circuit diagram: capacitors 0..n are the upper
//! arm top-to-bottom, n..2n the lower arm. A gate bit of 1 means the
//! capacitor is inserted into the arm voltage.

use crate::error::{Error, Result};
use crate::params::{ConverterParams, Mat2};

/// Full switched state: 2n capacitor voltages plus the two arm currents.
#[derive(Clone, Debug, PartialEq)]
pub struct FullState {
    pub vc: Vec<f64>,
    pub i1: f64,
    pub i2: f64,
}

impl FullState {
    /// All capacitors at `vc0`, zero currents.
    pub fn uniform(n: usize, vc0: f64) -> Self {
        Self {
            vc: vec![vc0; 2 * n],
            i1: 0.0,
            i2: 0.0,
        }
    }

    pub fn check_dims(&self, n: usize) -> Result<()> {
        if self.vc.len() != 2 * n {
            return Err(Error::InvalidInput(format!(
                "state has {} capacitor voltages, expected {}",
                self.vc.len(),
                2 * n
            )));
        }
        Ok(())
    }

    /// Mean upper-arm capacitor voltage.
    pub fn vc1_mean(&self) -> f64 {
        let n = self.vc.len() / 2;
        self.vc[..n].iter().sum::<f64>() / n as f64
    }

    /// Mean lower-arm capacitor voltage.
    pub fn vc2_mean(&self) -> f64 {
        let n = self.vc.len() / 2;
        self.vc[n..].iter().sum::<f64>() / n as f64
    }
}

/// Per-capacitor gate vector plus the implied insertion counts.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchCommand {
    pub gates: Vec<bool>,
    pub n1: usize,
    pub n2: usize,
}

impl SwitchCommand {
    pub fn from_gates(gates: Vec<bool>) -> Result<Self> {
        if gates.len() % 2 != 0 || gates.is_empty() {
            return Err(Error::InvalidInput(format!(
                "gate vector length {} is not 2n",
                gates.len()
            )));
        }
        let n = gates.len() / 2;
        let n1 = gates[..n].iter().filter(|&&g| g).count();
        let n2 = gates[n..].iter().filter(|&&g| g).count();
        Ok(Self { gates, n1, n2 })
    }

    pub fn all_bypassed(n: usize) -> Self {
        Self {
            gates: vec![false; 2 * n],
            n1: 0,
            n2: 0,
        }
    }
}

/// Averaged capacitive state: per-arm mean voltages and arm currents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AverageState {
    pub vc1: f64,
    pub vc2: f64,
    pub i1: f64,
    pub i2: f64,
}

/// Sum/difference coordinates of currents and voltages.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransformedSignals {
    pub is: f64,
    pub id: f64,
    pub vs: f64,
    pub vd: f64,
}

/// The congruent transform T_w mapping (Is, Id) onto (I1, I2).
pub fn transform_matrix() -> Mat2 {
    Mat2::new(0.5, 0.5, 0.5, -0.5)
}

/// Commutated arm voltages V1 = Vdc - T1' vc1, V2 = -Vdc + T2' vc2.
pub fn arm_voltages(
    params: &ConverterParams,
    cmd: &SwitchCommand,
    vc: &[f64],
) -> Result<(f64, f64)> {
    let n = params.n;
    if vc.len() != 2 * n || cmd.gates.len() != 2 * n {
        return Err(Error::InvalidInput(format!(
            "expected {} capacitor voltages and gates, got {} and {}",
            2 * n,
            vc.len(),
            cmd.gates.len()
        )));
    }
    let mut sum1 = 0.0;
    let mut sum2 = 0.0;
    for i in 0..n {
        if cmd.gates[i] {
            sum1 += vc[i];
        }
        if cmd.gates[n + i] {
            sum2 += vc[n + i];
        }
    }
    Ok((params.vdc - sum1, -params.vdc + sum2))
}

/// Quantized arm voltages from insertion counts and mean arm voltages.
pub fn arm_voltages_average(params: &ConverterParams, n1: usize, n2: usize, vc1: f64, vc2: f64) -> (f64, f64) {
    (
        params.vdc - n1 as f64 * vc1,
        -params.vdc + n2 as f64 * vc2,
    )
}

/// Time derivative of the full switched state.
///
/// `l_inv` is the cached inverse of the inductance matrix from
/// [`ConverterParams::inductance_inverse`].
pub fn full_model_derivative(
    params: &ConverterParams,
    l_inv: &Mat2,
    state: &FullState,
    cmd: &SwitchCommand,
    va: f64,
) -> Result<FullState> {
    state.check_dims(params.n)?;
    let n = params.n;
    let (v1, v2) = arm_voltages(params, cmd, &state.vc)?;

    let mut dvc = vec![0.0; 2 * n];
    for i in 0..n {
        if cmd.gates[i] {
            dvc[i] = state.i1 / params.c;
        }
        if cmd.gates[n + i] {
            dvc[n + i] = -state.i2 / params.c;
        }
    }

    let a = params.resistance_matrix();
    let ri = a.mul_vec([state.i1, state.i2]);
    let di = l_inv.mul_vec([ri[0] + v1 - va, ri[1] + v2 - va]);

    Ok(FullState {
        vc: dvc,
        i1: di[0],
        i2: di[1],
    })
}

/// Time derivative of the averaged model under insertion counts (n1, n2).
pub fn average_model_derivative(
    params: &ConverterParams,
    l_inv: &Mat2,
    state: &AverageState,
    n1: usize,
    n2: usize,
    va: f64,
) -> Result<AverageState> {
    if n1 > params.n || n2 > params.n {
        return Err(Error::InvalidInput(format!(
            "insertion counts ({n1}, {n2}) exceed n = {}",
            params.n
        )));
    }
    let c_t = params.c_t();
    let (v1, v2) = arm_voltages_average(params, n1, n2, state.vc1, state.vc2);
    let a = params.resistance_matrix();
    let ri = a.mul_vec([state.i1, state.i2]);
    let di = l_inv.mul_vec([ri[0] + v1 - va, ri[1] + v2 - va]);
    Ok(AverageState {
        vc1: n1 as f64 * state.i1 / c_t,
        vc2: -(n2 as f64) * state.i2 / c_t,
        i1: di[0],
        i2: di[1],
    })
}

/// (I1, I2) -> (Is, Id).
pub fn sum_diff_transform(i1: f64, i2: f64) -> (f64, f64) {
    (i1 + i2, i1 - i2)
}

/// (Is, Id) -> (I1, I2).
pub fn inverse_transform(is: f64, id: f64) -> (f64, f64) {
    ((is + id) / 2.0, (is - id) / 2.0)
}

/// Decoupled dynamics of the transformed currents.
pub fn decoupled_dynamics(
    params: &ConverterParams,
    is: f64,
    id: f64,
    vs: f64,
    vd: f64,
    va: f64,
) -> (f64, f64) {
    let dis = (-params.r_t() * is - 2.0 * va + vs) / params.l_t();
    let did = (-params.r * id + vd) / params.l;
    (dis, did)
}

/// Squared-voltage dynamics of the averaged capacitive part.
///
/// Returns `(d(Vc1^2)/dt, d(Vc2^2)/dt, P1, P2)` where the power terms are
/// P1 = 2 Vdc Id - Vd Id - f(t) Ia and P2 = 2 Vdc Ia - Vd Ia - f(t) Id.
pub fn squared_voltage_dynamics(
    params: &ConverterParams,
    vd: f64,
    id: f64,
    ia_des: f64,
    f_t: f64,
) -> (f64, f64, f64, f64) {
    let p1 = 2.0 * params.vdc * id - vd * id - f_t * ia_des;
    let p2 = 2.0 * params.vdc * ia_des - vd * ia_des - f_t * id;
    let two_ct = 2.0 * params.c_t();
    ((p1 + p2) / two_ct, (p1 - p2) / two_ct, p1, p2)
}
