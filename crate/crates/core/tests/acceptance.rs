//! End-to-end acceptance checks. Each numbered criterion prints one PASS or
//! FAIL line with the measured figure so a run of this test doubles as a
//! verification report.

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mmc_core::analysis::{amplitude_spectrum, tracking_metrics};
use mmc_core::controller::{
    constant_reference_for, filter_step, select_levels, ControllerGains, PredictionInputs,
    ReferenceMode,
};
use mmc_core::harmonic::{
    alpha_lr, c0_and_vd0_bounds, decompose_p1, decompose_p2, feedforward_f, p20_closed_form,
    steady_state_id, HarmonicSpec,
};
use mmc_core::model::{
    decoupled_dynamics, inverse_transform, sum_diff_transform, transform_matrix,
};
use mmc_core::params::Mat2;
use mmc_core::sim::{compare_traces, seeded_gate_sequence};
use mmc_core::trace::Trace;
use mmc_core::{
    run_closed_loop, run_open_loop, run_oracle, ConverterParams, FullState, Scenario, TraceRow,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_spec(p: &ConverterParams, rng: &mut ChaCha8Rng) -> HarmonicSpec {
    HarmonicSpec {
        vd0: rng.gen_range(-5.0..5.0),
        vd_m: rng.gen_range(0.0..10.0),
        alpha_vd: rng.gen_range(-PI..PI),
        ia_m: rng.gen_range(0.0..10.0),
        va_m: rng.gen_range(0.0..20.0),
        alpha_va: rng.gen_range(-PI..PI),
        omega: p.omega,
    }
}

/// Draw a spec whose operating point admits a P10 = 0 root.
fn random_feasible_spec(p: &ConverterParams, rng: &mut ChaCha8Rng) -> HarmonicSpec {
    loop {
        let spec = random_spec(p, rng);
        let f = feedforward_f(p, spec.ia_m, spec.va_m, spec.alpha_va);
        if c0_and_vd0_bounds(p, &spec, &f).is_ok() {
            return spec;
        }
    }
}

/// 1. The constant-plus-oscillation decompositions of the two power terms
/// reconstruct the direct products P1 = 2 Vdc Id - Vd Id - f Ia and
/// P2 = 2 Vdc Ia - Vd Ia - f Id with steady-state Id.
fn c01_harmonic_reconstruction() -> Outcome {
    let start = Instant::now();
    let p = ConverterParams::table2();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let spec = random_feasible_spec(&p, &mut rng);
        let f = feedforward_f(&p, spec.ia_m, spec.va_m, spec.alpha_va);
        let id_ss = steady_state_id(&p, &spec).unwrap();
        let d1 = decompose_p1(&p, &spec, &f, &id_ss);
        let d2 = decompose_p2(&p, &spec, &f, &id_ss);
        let vd = spec.vd();
        let ia = spec.ia();
        let mut peak1 = 0.0f64;
        let mut peak2 = 0.0f64;
        let mut err1 = 0.0f64;
        let mut err2 = 0.0f64;
        for k in 0..64 {
            let t = k as f64 / 64.0 * 2.0 * PI / p.omega;
            let wt = p.omega * t;
            let idv = id_ss.eval(t);
            let p1_direct = 2.0 * p.vdc * idv - vd.eval(t) * idv - f.eval(t) * ia.eval(t);
            let p2_direct =
                2.0 * p.vdc * ia.eval(t) - vd.eval(t) * ia.eval(t) - f.eval(t) * idv;
            peak1 = peak1.max(p1_direct.abs());
            peak2 = peak2.max(p2_direct.abs());
            err1 = err1.max((d1.p10 + d1.oscillatory(wt) - p1_direct).abs());
            err2 = err2.max((d2.p20 + d2.oscillatory(wt) - p2_direct).abs());
        }
        worst = worst.max(err1 / peak1.max(1.0)).max(err2 / peak2.max(1.0));
    }
    let dt = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-9 && dt < 5.0,
        format!("max relative reconstruction error {worst:.2e}, {dt:.2} s"),
    )
}

/// 2. P10 vanishes at the computed offset boundary Vd0-.
fn c02_boundary_root() -> Outcome {
    let p = ConverterParams::table2();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let base = random_feasible_spec(&p, &mut rng);
        let f = feedforward_f(&p, base.ia_m, base.va_m, base.alpha_va);
        let (_, vd0_minus, _) = c0_and_vd0_bounds(&p, &base, &f).unwrap();
        let spec = HarmonicSpec {
            vd0: vd0_minus,
            ..base
        };
        let id_ss = steady_state_id(&p, &spec).unwrap();
        let d = decompose_p1(&p, &spec, &f, &id_ss);
        let scale = (2.0 * p.vdc * id_ss.offset).abs().max(1.0);
        worst = worst.max(d.p10.abs() / scale);
    }
    outcome(worst < 1e-9, format!("max |P10(Vd0-)| {worst:.2e} relative"))
}

/// 3. The closed-form (a, b, gamma) expression for P20 agrees with the
/// decomposition constant across a sweep of the circulating-voltage phase.
fn c03_p20_equivalence() -> Outcome {
    let p = ConverterParams::table2();
    let mut worst = 0.0f64;
    for k in 0..100 {
        let alpha_vd = -PI + 2.0 * PI * k as f64 / 100.0;
        let spec = HarmonicSpec {
            vd0: 0.7,
            vd_m: 2.5,
            alpha_vd,
            ia_m: 1.5,
            va_m: p.va_m,
            alpha_va: p.alpha_va,
            omega: p.omega,
        };
        let f = feedforward_f(&p, spec.ia_m, spec.va_m, spec.alpha_va);
        let id_ss = steady_state_id(&p, &spec).unwrap();
        let reference = decompose_p2(&p, &spec, &f, &id_ss).p20;
        let (_, _, _, closed) = p20_closed_form(&p, &spec, &f);
        worst = worst.max((closed - reference).abs() / reference.abs().max(1.0));
    }
    outcome(worst < 1e-10, format!("max relative mismatch {worst:.2e}"))
}

/// Least-squares fit of offset + A sin(wt + phi) over whole periods.
fn fit_sinusoid(samples: &[(f64, f64)], omega: f64) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let (mut mean, mut s, mut c) = (0.0, 0.0, 0.0);
    for &(t, y) in samples {
        mean += y;
        s += y * (omega * t).sin();
        c += y * (omega * t).cos();
    }
    (mean / n, (2.0 * s / n).hypot(2.0 * c / n), (2.0 * c / n).atan2(2.0 * s / n))
}

/// 4. Integrating L dId/dt = -R Id + Vd for ten periods lands on the
/// closed-form amplitude, phase and offset of the steady-state solution.
fn c04_steady_state_id() -> Outcome {
    let p = ConverterParams::table2();
    let spec = HarmonicSpec {
        vd0: 0.5,
        vd_m: 2.0,
        alpha_vd: 0.7,
        ia_m: 1.5,
        va_m: p.va_m,
        alpha_va: p.alpha_va,
        omega: p.omega,
    };
    let id_ss = steady_state_id(&p, &spec).unwrap();
    let vd = spec.vd();
    let period = 2.0 * PI / p.omega;
    let steps_per_period = 4000usize;
    let h = period / steps_per_period as f64;
    let deriv = |t: f64, id: f64| (-p.r * id + vd.eval(t)) / p.l;
    // Start on the steady orbit so the last period is transient-free.
    let mut id = id_ss.eval(0.0);
    let mut t = 0.0;
    let mut last = Vec::new();
    for k in 0..10 * steps_per_period {
        let k1 = deriv(t, id);
        let k2 = deriv(t + h / 2.0, id + h / 2.0 * k1);
        let k3 = deriv(t + h / 2.0, id + h / 2.0 * k2);
        let k4 = deriv(t + h, id + h * k3);
        id += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
        if k >= 9 * steps_per_period {
            last.push((t, id));
        }
    }
    let (off, amp, phase) = fit_sinusoid(&last, p.omega);
    let e_off = (off - id_ss.offset).abs() / id_ss.offset.abs();
    let e_amp = (amp - id_ss.amplitude).abs() / id_ss.amplitude;
    let mut e_ph = (phase - id_ss.phase).abs();
    if e_ph > PI {
        e_ph = 2.0 * PI - e_ph;
    }
    outcome(
        e_off < 1e-3 && e_amp < 1e-3 && e_ph < 1e-3,
        format!("offset {e_off:.2e}, amplitude {e_amp:.2e}, phase {e_ph:.2e} relative"),
    )
}

/// 5. The sum/difference transform exactly diagonalizes the inductive
/// subsystem, and the decoupled trajectory maps back onto the coupled one.
fn c05_transform_congruence() -> Outcome {
    let p = ConverterParams::table2();
    let tw = transform_matrix();
    let diag = |m: &Mat2| {
        let c = tw.transpose().mul(m).mul(&tw);
        c.m[0][1] == 0.0 && c.m[1][0] == 0.0
    };
    let diagonalized = diag(&p.inductance_matrix()) && diag(&p.resistance_matrix());

    // Shared sinusoidal inputs; integrate both forms with RK4 at 1e-5 s.
    let v1 = |t: f64| 30.0 * (p.omega * t + 0.3).sin() + 5.0;
    let v2 = |t: f64| -28.0 * (p.omega * t - 0.2).sin() - 4.0;
    let va = |t: f64| p.va(t);
    let l_inv = p.inductance_inverse().unwrap();
    let a = p.resistance_matrix();
    let coupled = |t: f64, x: [f64; 2]| {
        let ri = a.mul_vec(x);
        l_inv.mul_vec([ri[0] + v1(t) - va(t), ri[1] + v2(t) - va(t)])
    };
    let decoupled = |t: f64, x: [f64; 2]| {
        let (dis, did) =
            decoupled_dynamics(&p, x[0], x[1], v1(t) + v2(t), v1(t) - v2(t), va(t));
        [dis, did]
    };
    let rk4 = |f: &dyn Fn(f64, [f64; 2]) -> [f64; 2], mut x: [f64; 2]| {
        let h = 1e-5;
        let mut t = 0.0;
        let mut path = Vec::with_capacity(10_000);
        for _ in 0..10_000 {
            let k1 = f(t, x);
            let k2 = f(t + h / 2.0, [x[0] + h / 2.0 * k1[0], x[1] + h / 2.0 * k1[1]]);
            let k3 = f(t + h / 2.0, [x[0] + h / 2.0 * k2[0], x[1] + h / 2.0 * k2[1]]);
            let k4 = f(t + h, [x[0] + h * k3[0], x[1] + h * k3[1]]);
            for i in 0..2 {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t += h;
            path.push(x);
        }
        path
    };
    let (i1_0, i2_0) = (1.2, -0.4);
    let path_c = rk4(&coupled, [i1_0, i2_0]);
    let (is_0, id_0) = sum_diff_transform(i1_0, i2_0);
    let path_d = rk4(&decoupled, [is_0, id_0]);
    let mut worst = 0.0f64;
    for (xc, xd) in path_c.iter().zip(&path_d) {
        let (i1m, i2m) = inverse_transform(xd[0], xd[1]);
        worst = worst.max((xc[0] - i1m).abs()).max((xc[1] - i2m).abs());
    }
    outcome(
        diagonalized && worst < 1e-6,
        format!(
            "off-diagonals {}, trajectory mismatch {worst:.2e} A over 0.1 s",
            if diagonalized { "exactly zero" } else { "NONZERO" }
        ),
    )
}

/// 6. The switched model at the control rate agrees with a 100x-refined
/// integration of the same gate sequence.
fn c06_model_verification() -> Outcome {
    let start = Instant::now();
    let p = ConverterParams::table1();
    let steps = (0.5 / p.ts).round() as usize;
    let gates = seeded_gate_sequence(&p, 110.0, steps, 42).unwrap();
    let initial = FullState::uniform(p.n, 110.0);
    let fast = run_open_loop(&p, &gates, &initial).unwrap();
    let fine = run_oracle(&p, &gates, &initial, 100).unwrap();
    let d = compare_traces(&fast, &fine).unwrap();
    let dt = start.elapsed().as_secs_f64();
    outcome(
        d.vc < 15e-3 && d.current < 20e-3 && d.arm_voltage < 40e-3 && dt < 30.0,
        format!(
            "max diffs: vc {:.4} mV, currents {:.4} mA, V1/V2 {:.4} mV, {dt:.1} s",
            d.vc * 1e3,
            d.current * 1e3,
            d.arm_voltage * 1e3
        ),
    )
}

/// 7. With the window opened to the full range, the level selector equals a
/// brute-force argmin over every admissible pair.
fn c07_optimizer_oracle() -> Outcome {
    let p = ConverterParams::table2();
    let l_inv = p.inductance_inverse().unwrap();
    let gains = ControllerGains {
        wn: p.n,
        ..ControllerGains::table2()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0usize;
    for _ in 0..1000 {
        let inputs = PredictionInputs {
            i1: rng.gen_range(-10.0..10.0),
            i2: rng.gen_range(-10.0..10.0),
            vc1_bar: rng.gen_range(20.0..40.0),
            vc2_bar: rng.gen_range(20.0..40.0),
            va_k: rng.gen_range(-10.0..10.0),
            ia_des_next: rng.gen_range(-9.0..9.0),
            id_des_next: rng.gen_range(-2.0..2.0),
        };
        let n1_prev = rng.gen_range(0..=p.n);
        let n2_prev = rng.gen_range(0..=p.n);
        let (n1, n2, _) = select_levels(&p, &l_inv, &gains, &inputs, n1_prev, n2_prev);
        // Independent exhaustive search with the documented key ordering.
        let mut best: Option<(f64, usize, usize, usize)> = None;
        for c1 in 0..=p.n {
            for c2 in 0..=p.n {
                let (e_ia, e_id) = mmc_core::controller::predict_errors(
                    &p,
                    &l_inv,
                    inputs.i1,
                    inputs.i2,
                    inputs.vc1_bar,
                    inputs.vc2_bar,
                    inputs.va_k,
                    inputs.ia_des_next,
                    inputs.id_des_next,
                    c1,
                    c2,
                );
                let j = gains.alpha1 * e_ia * e_ia + gains.alpha2 * e_id * e_id;
                let key = (j, c1.abs_diff(n1_prev) + c2.abs_diff(n2_prev), c1, c2);
                if best.is_none() || key < *best.as_ref().unwrap() {
                    best = Some(key);
                }
            }
        }
        let (_, _, b1, b2) = best.unwrap();
        if (n1, n2) != (b1, b2) {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches} / 1000 mismatches"))
}

fn table2_run(mode: ReferenceMode) -> Trace {
    let mut sc = Scenario::table2();
    sc.duration = 3.5;
    sc.reference_mode = mode;
    run_closed_loop(&sc).unwrap()
}

/// 8. Per-arm capacitor spread stays under 2% of the arm mean once the
/// start-up transient has passed.
fn c08_balancing_spread(tr: &Trace) -> Outcome {
    let n = tr.n;
    let mut worst = 0.0f64;
    let mut worst_t = 0.0f64;
    let mut viol: Vec<f64> = Vec::new();
    for row in tr.rows.iter().filter(|r| r.t >= 0.1) {
        for arm in [&row.vc[..n], &row.vc[n..]] {
            let mean = arm.iter().sum::<f64>() / n as f64;
            let max = arm.iter().cloned().fold(f64::MIN, f64::max);
            let min = arm.iter().cloned().fold(f64::MAX, f64::min);
            let s = (max - min) / mean;
            if s > worst {
                worst = s;
                worst_t = row.t;
            }
            if s >= 0.02 {
                viol.push(row.t);
            }
        }
    }
    let detail = if viol.is_empty() {
        format!("max spread {:.3}% of arm mean", worst * 100.0)
    } else {
        // Known limitation: during the recharge burst after an upward
        // amplitude step the arm current reaches ~14 A while only 1-2 of the
        // 8 submodules are inserted, so each inserted capacitor gains
        // I1*Ts/C ~ 1.4 V (~3.5% of the ~40 V arm mean) in a single control
        // period. With gates held for a full period, no insertion-sorting
        // strategy can keep max-min below 0.8 V (2%) during those samples.
        format!(
            "max spread {:.3}% of arm mean at t = {:.4} s; {} samples above 2%, \
             all within t in [{:.4}, {:.4}] s (recharge burst after the 1.4 s \
             amplitude step, where one control period deposits I1*Ts/C ~ 1.4 V \
             = 3.5% of the arm mean on each inserted capacitor)",
            worst * 100.0,
            worst_t,
            viol.len(),
            viol.first().unwrap(),
            viol.last().unwrap()
        )
    };
    outcome(worst < 0.02, detail)
}

/// 9. The filtered pair-mean capacitor voltage settles within 3% of its
/// reference within 0.3 s of each amplitude step.
fn c09_reference_tracking(tr: &Trace) -> Outcome {
    let sc = Scenario::table2();
    let tau = sc.gains.tau;
    let ts = tr.ts;
    let mut vc1f = tr.rows[0].vc1_bar;
    let mut vc2f = tr.rows[0].vc2_bar;
    let steps = [0.0, 1.4, 2.6];
    let mut worst = 0.0f64;
    let mut ok = true;
    for row in &tr.rows {
        vc1f = filter_step(vc1f, row.vc1_bar, ts, tau);
        vc2f = filter_step(vc2f, row.vc2_bar, ts, tau);
        let mis = (vc1f + vc2f) / 2.0;
        let settled_window = steps.iter().all(|&s| row.t < s || row.t >= s + 0.3);
        if settled_window {
            let rel = (mis - row.vc12_des).abs() / row.vc12_des;
            worst = worst.max(rel);
            if rel > 0.03 {
                ok = false;
            }
        }
    }
    outcome(ok, format!("max |mis - des| {:.2}% of des in settled windows", worst * 100.0))
}

/// 10. Adaptive-versus-constant reference comparison over the three
/// single-period windows at the end of each amplitude segment.
fn c10_reference_comparison(opt: &Trace, con: &Trace) -> Outcome {
    let omega = ConverterParams::table2().omega;
    let windows = [(0.38, 0.4), (2.14, 2.16), (3.08, 3.1)];
    let mut lines = Vec::new();
    let mut ok = true;
    let mut reports = Vec::new();
    for (t0, t1) in windows {
        let o = mmc_core::analysis::report(opt, t0, t1, omega).unwrap();
        let c = mmc_core::analysis::report(con, t0, t1, omega).unwrap();
        reports.push((o, c));
    }
    // 9 A window: both in-range and nearly equal.
    let (o9, c9) = &reports[1];
    let in_range = |x: f64| (0.014..=0.056).contains(&x);
    if !(in_range(o9.rms_e_ia) && in_range(c9.rms_e_ia)) {
        ok = false;
        lines.push("9A RMS out of range".to_string());
    }
    let d9 = (o9.rms_e_ia - c9.rms_e_ia).abs() / c9.rms_e_ia;
    if d9 > 0.05 {
        ok = false;
        lines.push(format!("9A |dRMS| {:.1}%", d9 * 100.0));
    }
    // 1.5 A window: at least 25% RMS reduction.
    let (o15, c15) = &reports[0];
    let r15 = 1.0 - o15.rms_e_ia / c15.rms_e_ia;
    if r15 < 0.25 {
        ok = false;
        lines.push(format!("1.5A RMS reduction {:.1}%", r15 * 100.0));
    }
    // 0.75 A window: at least 30% reductions in RMS and peak error.
    let (o75, c75) = &reports[2];
    let r75 = 1.0 - o75.rms_e_ia / c75.rms_e_ia;
    let m75 = 1.0 - o75.max_abs_e_ia / c75.max_abs_e_ia;
    if r75 < 0.30 || m75 < 0.30 {
        ok = false;
        lines.push(format!(
            "0.75A reductions rms {:.1}%, max {:.1}%",
            r75 * 100.0,
            m75 * 100.0
        ));
    }
    // Lower distortion with the adaptive reference at both low amplitudes.
    if !(o15.thd < c15.thd && o75.thd < c75.thd) {
        ok = false;
        lines.push("THD not lower in adaptive mode".to_string());
    }
    let summary = format!(
        "dRMS: 1.5A -{:.1}%, 9A {:+.1}%, 0.75A -{:.1}%; dmax 0.75A -{:.1}%; THD opt<con {}{}",
        r15 * 100.0,
        (o9.rms_e_ia / c9.rms_e_ia - 1.0) * 100.0,
        r75 * 100.0,
        m75 * 100.0,
        o15.thd < c15.thd && o75.thd < c75.thd,
        if lines.is_empty() {
            String::new()
        } else {
            format!("; FAILED: {}", lines.join(", "))
        }
    );
    outcome(ok, summary)
}

/// 11. The one-step forward-Euler prediction converges at second order in
/// the step size against the exact linear response.
fn c11_euler_order() -> Outcome {
    let p = ConverterParams::table2();
    let l_inv = p.inductance_inverse().unwrap();
    let a = p.resistance_matrix();
    let (i1_0, i2_0) = (2.0, -1.0);
    let (v1, v2, va) = (30.0, -140.0, 5.0);
    let exact = |ts: f64| {
        // Constant inputs: the decoupled scalars relax exponentially.
        let (is0, id0) = sum_diff_transform(i1_0, i2_0);
        let is_inf = (v1 + v2 - 2.0 * va) / p.r_t();
        let id_inf = (v1 - v2) / p.r;
        let is = is_inf + (is0 - is_inf) * (-p.r_t() * ts / p.l_t()).exp();
        let id = id_inf + (id0 - id_inf) * (-p.r * ts / p.l).exp();
        inverse_transform(is, id)
    };
    let euler = |ts: f64| {
        let ri = a.mul_vec([i1_0, i2_0]);
        let di = l_inv.mul_vec([ri[0] + v1 - va, ri[1] + v2 - va]);
        (i1_0 + di[0] * ts, i2_0 + di[1] * ts)
    };
    let err = |ts: f64| {
        let (e1, e2) = euler(ts);
        let (x1, x2) = exact(ts);
        (e1 - x1).hypot(e2 - x2)
    };
    let e = [err(2e-4), err(1e-4), err(5e-5)];
    let r1 = e[0] / e[1];
    let r2 = e[1] / e[2];
    outcome(
        (3.5..4.5).contains(&r1) && (3.5..4.5).contains(&r2),
        format!("error ratios under halving: {r1:.3}, {r2:.3} (expect ~4)"),
    )
}

/// 12. Windowed RMS and the spectrum normalization agree with closed forms.
fn c12_metric_sanity() -> Outcome {
    let omega = 2.0 * PI * 50.0;
    let ts = 1e-4;
    let amp = 0.0321;
    let mut tr = Trace::new(1, ts);
    for k in 0..200usize {
        let t = k as f64 * ts;
        tr.rows.push(TraceRow {
            t,
            i1: 0.0,
            i2: 0.0,
            is: 0.0,
            id: 0.0,
            v1: 0.0,
            v2: 0.0,
            vc: vec![0.0, 0.0],
            vc1_bar: 0.0,
            vc2_bar: 0.0,
            vc12_des: 0.0,
            ia_des: amp * (omega * t).sin(),
            id_des: 0.0,
            n1: 0,
            n2: 0,
            objective: 0.0,
        });
    }
    let (rms, _) = tracking_metrics(&tr, 0.0, 0.02).unwrap();
    let e_rms = (rms - amp / 2.0f64.sqrt()).abs();

    let samples: Vec<f64> = (0..200)
        .map(|k| {
            let t = k as f64 * ts;
            0.4 + 1.7 * (omega * t + 0.3).sin() + 0.6 * (3.0 * omega * t).cos()
        })
        .collect();
    let spec = amplitude_spectrum(&samples);
    let mean_sq = samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64;
    let mut bins = spec[0] * spec[0];
    for (k, a) in spec.iter().enumerate().skip(1) {
        bins += if 2 * k == samples.len() {
            a * a / 4.0
        } else {
            a * a / 2.0
        };
    }
    let e_parseval = (mean_sq - bins).abs() / mean_sq;
    outcome(
        e_rms < 1e-12 && e_parseval < 1e-9,
        format!("RMS error {e_rms:.2e}, Parseval relative error {e_parseval:.2e}"),
    )
}

#[test]
fn acceptance_criteria() {
    // The two long closed-loop runs are shared by criteria 8-10.
    let opt = table2_run(ReferenceMode::Optimal);
    let cref = constant_reference_for(&ConverterParams::table2(), 9.0).unwrap();
    let con = table2_run(ReferenceMode::Constant(cref));

    let results: Vec<(&str, Outcome)> = vec![
        ("01 harmonic reconstruction", c01_harmonic_reconstruction()),
        ("02 P10 boundary root", c02_boundary_root()),
        ("03 closed-form P20 equivalence", c03_p20_equivalence()),
        ("04 steady-state circulating current", c04_steady_state_id()),
        ("05 transform congruence", c05_transform_congruence()),
        ("06 switched-model verification", c06_model_verification()),
        ("07 optimizer oracle equivalence", c07_optimizer_oracle()),
        ("08 capacitor balancing spread", c08_balancing_spread(&opt)),
        ("09 voltage reference tracking", c09_reference_tracking(&opt)),
        ("10 adaptive vs constant reference", c10_reference_comparison(&opt, &con)),
        ("11 Euler prediction order", c11_euler_order()),
        ("12 metric sanity", c12_metric_sanity()),
    ];

    let mut failed = Vec::new();
    for (name, r) in &results {
        println!(
            "criterion {name}: {} — {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.detail
        );
        if !r.pass {
            failed.push(*name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {}", failed.join("; "));
}
