//! Closed-form steady-state harmonic analysis of the squared-voltage
//! dynamics: decomposition of the power terms P1 and P2 into constant plus
//! zero-mean oscillatory parts, and the admissible offset boundary Vd0-.
//!
//! All phases use the two-argument arctangent and are normalized to
//! (-pi, pi] after every angle sum.

use crate::error::{Error, Result};
use crate::params::ConverterParams;

/// Normalize an angle to (-pi, pi].
pub fn normalize_phase(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut x = a.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// offset + amplitude * sin(omega t + phase)
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sinusoid {
    pub offset: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub omega: f64,
}

impl Sinusoid {
    pub fn new(offset: f64, amplitude: f64, phase: f64, omega: f64) -> Self {
        // Keep amplitude nonnegative by folding a sign flip into the phase.
        let (amplitude, phase) = if amplitude < 0.0 {
            (-amplitude, normalize_phase(phase + std::f64::consts::PI))
        } else {
            (amplitude, normalize_phase(phase))
        };
        Self {
            offset,
            amplitude,
            phase,
            omega,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.offset + self.amplitude * (self.omega * t + self.phase).sin()
    }

    /// Analytic time derivative.
    pub fn derivative(&self, t: f64) -> f64 {
        self.amplitude * self.omega * (self.omega * t + self.phase).cos()
    }
}

/// Sinusoid parameters driving the analysis: the circulating-voltage design
/// (Vd0, VdM, alphaVd) and the load-side drive (IaM, VaM, alphaVa, omega).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicSpec {
    pub vd0: f64,
    pub vd_m: f64,
    pub alpha_vd: f64,
    pub ia_m: f64,
    pub va_m: f64,
    pub alpha_va: f64,
    pub omega: f64,
}

impl HarmonicSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) {
            return Err(Error::InvalidInput(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        Ok(())
    }

    /// Vd(t) = Vd0 + VdM sin(wt + alphaVd)
    pub fn vd(&self) -> Sinusoid {
        Sinusoid {
            offset: self.vd0,
            amplitude: self.vd_m,
            phase: self.alpha_vd,
            omega: self.omega,
        }
    }

    /// Desired load current Ia(t) = IaM sin(wt)
    pub fn ia(&self) -> Sinusoid {
        Sinusoid::new(0.0, self.ia_m, 0.0, self.omega)
    }
}

/// All constants produced by the closed-form analysis.
#[derive(Clone, Copy, Debug)]
pub struct HarmonicAnalysis {
    pub f_m: f64,
    pub alpha_f: f64,
    pub alpha_lr: f64,
    pub id0: f64,
    pub id_m: f64,
    /// V^2-scaled constant of the P10 parabola.
    pub c0: f64,
    pub vd0_minus: f64,
    pub vd0_plus: f64,
    pub p10: f64,
    pub p20: f64,
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub beta: f64,
}

/// Feedforward sum-voltage f(t) = L_T dIa/dt + R_T Ia + 2 Va as a single
/// sinusoid (fM, alpha_f).
pub fn feedforward_f(params: &ConverterParams, ia_m: f64, va_m: f64, alpha_va: f64) -> Sinusoid {
    let s_f = params.l_t() * ia_m * params.omega + 2.0 * va_m * alpha_va.sin();
    let c_f = params.r_t() * ia_m + 2.0 * va_m * alpha_va.cos();
    let f_m = s_f.hypot(c_f);
    let alpha_f = if f_m == 0.0 { 0.0 } else { s_f.atan2(c_f) };
    Sinusoid::new(0.0, f_m, alpha_f, params.omega)
}

/// Lag angle alpha_LR = atan(L w / R).
pub fn alpha_lr(params: &ConverterParams) -> f64 {
    (params.l * params.omega).atan2(params.r)
}

/// Steady-state circulating current driven by Vd(t) from the spec.
pub fn steady_state_id(params: &ConverterParams, spec: &HarmonicSpec) -> Result<Sinusoid> {
    if params.r == 0.0 {
        return Err(Error::Config(
            "R = 0: the steady-state circulating current offset Id0 = Vd0 / R is undefined; \
             use a strictly positive arm resistance"
                .into(),
        ));
    }
    let id0 = spec.vd0 / params.r;
    let id_m = spec.vd_m / params.arm_impedance();
    Ok(Sinusoid::new(
        id0,
        id_m,
        normalize_phase(spec.alpha_vd - alpha_lr(params)),
        spec.omega,
    ))
}

/// Exact decomposition of a1 sin(wt+p1) * a2 sin(wt+p2) into a constant and
/// a second-harmonic sinusoid (returned as the cosine amplitude/phase pair).
///
/// product(t) = constant - (a1 a2 / 2) cos(2wt + p1 + p2)
pub fn product_of_sinusoids(a1: f64, p1: f64, a2: f64, p2: f64) -> (f64, f64, f64) {
    let constant = a1 * a2 / 2.0 * (p1 - p2).cos();
    (constant, -a1 * a2 / 2.0, normalize_phase(p1 + p2))
}

/// Constant part of P1 plus an evaluator for its zero-mean oscillation.
pub struct P1Decomposition {
    pub p10: f64,
    vdc: f64,
    vd0: f64,
    vd_m: f64,
    alpha_vd: f64,
    id0: f64,
    id_m: f64,
    alpha_lr: f64,
    f_m: f64,
    alpha_f: f64,
    ia_m: f64,
}

impl P1Decomposition {
    /// Zero-mean oscillatory part P1(wt), with wt the electrical angle.
    pub fn oscillatory(&self, wt: f64) -> f64 {
        let f_vd_id = self.id0 * self.vd_m * (wt + self.alpha_vd).sin()
            + self.vd0 * self.id_m * (wt + self.alpha_vd - self.alpha_lr).sin()
            - self.vd_m * self.id_m / 2.0 * (2.0 * wt + 2.0 * self.alpha_vd - self.alpha_lr).cos();
        2.0 * self.vdc * self.id_m * (wt + self.alpha_vd - self.alpha_lr).sin() - f_vd_id
            + self.f_m * self.ia_m / 2.0 * (2.0 * wt + self.alpha_f).cos()
    }
}

pub fn decompose_p1(
    params: &ConverterParams,
    spec: &HarmonicSpec,
    f: &Sinusoid,
    id_ss: &Sinusoid,
) -> P1Decomposition {
    let a_lr = alpha_lr(params);
    // Signed amplitude keeps the algebra valid when VdM < 0 (the sinusoid
    // itself folds the sign into its phase).
    let id_m = spec.vd_m / params.arm_impedance();
    let p10 = 2.0 * params.vdc * id_ss.offset
        - spec.vd0 * id_ss.offset
        - spec.vd_m * id_m / 2.0 * a_lr.cos()
        - f.amplitude * spec.ia_m / 2.0 * f.phase.cos();
    P1Decomposition {
        p10,
        vdc: params.vdc,
        vd0: spec.vd0,
        vd_m: spec.vd_m,
        alpha_vd: spec.alpha_vd,
        id0: id_ss.offset,
        id_m,
        alpha_lr: a_lr,
        f_m: f.amplitude,
        alpha_f: f.phase,
        ia_m: spec.ia_m,
    }
}

/// C0 and the offset boundaries Vd0-/Vd0+ where P10 crosses zero.
pub fn c0_and_vd0_bounds(
    params: &ConverterParams,
    spec: &HarmonicSpec,
    f: &Sinusoid,
) -> Result<(f64, f64, f64)> {
    let c0 = params.r * spec.vd_m * spec.vd_m * alpha_lr(params).cos()
        / (2.0 * params.arm_impedance())
        + params.r * f.amplitude * spec.ia_m * f.phase.cos() / 2.0;
    let vdc_sq = params.vdc * params.vdc;
    if vdc_sq < c0 {
        return Err(Error::InfeasibleOperatingPoint { vdc_sq, c0 });
    }
    let root = (vdc_sq - c0).sqrt();
    Ok((c0, params.vdc - root, params.vdc + root))
}

/// Constant part of P2 plus an evaluator for its zero-mean oscillation.
pub struct P2Decomposition {
    pub p20: f64,
    vdc: f64,
    vd0: f64,
    vd_m: f64,
    alpha_vd: f64,
    id0: f64,
    id_m: f64,
    alpha_lr: f64,
    f_m: f64,
    alpha_f: f64,
    ia_m: f64,
}

impl P2Decomposition {
    /// F2(wt) = Vd0 IaM sin(wt) - (VdM IaM / 2) cos(2wt + alphaVd)
    pub fn f2(&self, wt: f64) -> f64 {
        self.vd0 * self.ia_m * wt.sin()
            - self.vd_m * self.ia_m / 2.0 * (2.0 * wt + self.alpha_vd).cos()
    }

    /// F3(wt) = Id0 fM sin(wt + alphaF)
    ///        - (fM IdM / 2) cos(2wt + alphaF + alphaVd - alphaLR)
    pub fn f3(&self, wt: f64) -> f64 {
        self.id0 * self.f_m * (wt + self.alpha_f).sin()
            - self.f_m * self.id_m / 2.0
                * (2.0 * wt + self.alpha_f + self.alpha_vd - self.alpha_lr).cos()
    }

    /// Zero-mean oscillatory part P2(wt).
    pub fn oscillatory(&self, wt: f64) -> f64 {
        2.0 * self.vdc * self.ia_m * wt.sin() - self.f2(wt) - self.f3(wt)
    }
}

pub fn decompose_p2(
    params: &ConverterParams,
    spec: &HarmonicSpec,
    f: &Sinusoid,
    id_ss: &Sinusoid,
) -> P2Decomposition {
    let a_lr = alpha_lr(params);
    let id_m = spec.vd_m / params.arm_impedance();
    let p20 = -spec.vd_m * spec.ia_m / 2.0 * spec.alpha_vd.cos()
        - f.amplitude * id_m / 2.0 * (f.phase - spec.alpha_vd + a_lr).cos();
    P2Decomposition {
        p20,
        vdc: params.vdc,
        vd0: spec.vd0,
        vd_m: spec.vd_m,
        alpha_vd: spec.alpha_vd,
        id0: id_ss.offset,
        id_m,
        alpha_lr: a_lr,
        f_m: f.amplitude,
        alpha_f: f.phase,
        ia_m: spec.ia_m,
    }
}

/// Closed-form P20 in the (a, b, gamma) parameterization.
///
/// Returns (a, b, gamma, P20); gamma is the phase at which the pair-
/// difference control is most effective (the controller picks
/// alphaVd = -gamma).
pub fn p20_closed_form(
    params: &ConverterParams,
    spec: &HarmonicSpec,
    f: &Sinusoid,
) -> (f64, f64, f64, f64) {
    let z = params.arm_impedance();
    let beta = normalize_phase(-f.phase - alpha_lr(params));
    let a = spec.ia_m + f.amplitude * beta.cos() / z;
    let b = f.amplitude * beta.sin() / z;
    let gamma = if a == 0.0 && b == 0.0 { 0.0 } else { b.atan2(a) };
    let p20 = -spec.vd_m * a.hypot(b) / 2.0 * (spec.alpha_vd + gamma).cos();
    (a, b, gamma, p20)
}

/// Run the whole closed-form analysis for one operating point.
pub fn analyze(params: &ConverterParams, spec: &HarmonicSpec) -> Result<HarmonicAnalysis> {
    spec.validate()?;
    let f = feedforward_f(params, spec.ia_m, spec.va_m, spec.alpha_va);
    let id_ss = steady_state_id(params, spec)?;
    let (c0, vd0_minus, vd0_plus) = c0_and_vd0_bounds(params, spec, &f)?;
    let p1 = decompose_p1(params, spec, &f, &id_ss);
    let (a, b, gamma, p20) = p20_closed_form(params, spec, &f);
    Ok(HarmonicAnalysis {
        f_m: f.amplitude,
        alpha_f: f.phase,
        alpha_lr: alpha_lr(params),
        id0: id_ss.offset,
        id_m: id_ss.amplitude,
        c0,
        vd0_minus,
        vd0_plus,
        p10: p1.p10,
        p20,
        a,
        b,
        gamma,
        beta: normalize_phase(-f.phase - alpha_lr(params)),
    })
}
