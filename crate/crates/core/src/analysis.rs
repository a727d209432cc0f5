//! Trace evaluation: windowed tracking-error statistics and single-period
//! spectrum metrics of the load current.

use crate::error::{Error, Result};
use crate::trace::Trace;

/// Metrics over one evaluation window.
#[derive(Clone, Copy, Debug)]
pub struct MetricReport {
    pub window: (f64, f64),
    pub rms_e_ia: f64,
    pub max_abs_e_ia: f64,
    pub fundamental_amplitude: f64,
    pub thd: f64,
    pub avg_spectrum: f64,
}

/// RMS and max absolute tracking error eIa = ia_des - is over [t0, t1).
pub fn tracking_metrics(trace: &Trace, t0: f64, t1: f64) -> Result<(f64, f64)> {
    let rows = trace.window(t0, t1);
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!(
            "window [{t0}, {t1}) selects no samples"
        )));
    }
    let mut sum_sq = 0.0;
    let mut max_abs = 0.0f64;
    for r in rows {
        let e = r.ia_des - r.is;
        sum_sq += e * e;
        max_abs = max_abs.max(e.abs());
    }
    Ok(((sum_sq / rows.len() as f64).sqrt(), max_abs))
}

/// Single-sided amplitude spectrum of a real signal, A_0 = |X_0|/N and
/// A_k = 2|X_k|/N for k >= 1, computed by direct summation (windows are a
/// few hundred samples).
pub fn amplitude_spectrum(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let mut out = Vec::with_capacity(n / 2 + 1);
    for k in 0..=n / 2 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (j, &x) in samples.iter().enumerate() {
            let ang = -2.0 * std::f64::consts::PI * k as f64 * j as f64 / n as f64;
            re += x * ang.cos();
            im += x * ang.sin();
        }
        let mag = re.hypot(im) / n as f64;
        out.push(if k == 0 { mag } else { 2.0 * mag });
    }
    out
}

/// Fundamental amplitude, THD and mean spectral amplitude of Is over a
/// window of exactly one fundamental period.
pub fn spectrum_metrics(
    trace: &Trace,
    t0: f64,
    t1: f64,
    omega: f64,
) -> Result<(f64, f64, f64)> {
    let rows = trace.window(t0, t1);
    let expected = (2.0 * std::f64::consts::PI / (omega * trace.ts)).round() as usize;
    if rows.len() != expected {
        return Err(Error::InvalidInput(format!(
            "spectrum window must hold exactly one period ({expected} samples), got {}",
            rows.len()
        )));
    }
    let samples: Vec<f64> = rows.iter().map(|r| r.is).collect();
    let spec = amplitude_spectrum(&samples);
    let fundamental = spec[1];
    // Guard against a numerically-zero fundamental (DC or empty signal),
    // where THD is undefined.
    let scale = samples.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    if fundamental <= 1e-9 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidInput(
            "fundamental amplitude is zero (DC-only signal), THD undefined".into(),
        ));
    }
    let harmonics_sq: f64 = spec[2..].iter().map(|a| a * a).sum();
    let thd = harmonics_sq.sqrt() / fundamental;
    let avg = spec[1..].iter().sum::<f64>() / (spec.len() - 1) as f64;
    Ok((fundamental, thd, avg))
}

/// Full report over a window spanning whole periods; the spectrum uses the
/// first period of the window.
pub fn report(trace: &Trace, t0: f64, t1: f64, omega: f64) -> Result<MetricReport> {
    let (rms_e_ia, max_abs_e_ia) = tracking_metrics(trace, t0, t1)?;
    let period = 2.0 * std::f64::consts::PI / omega;
    let (fundamental_amplitude, thd, avg_spectrum) =
        spectrum_metrics(trace, t0, t0 + period, omega)?;
    Ok(MetricReport {
        window: (t0, t1),
        rms_e_ia,
        max_abs_e_ia,
        fundamental_amplitude,
        thd,
        avg_spectrum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::TraceRow;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn synthetic_trace(ts: f64, steps: usize, f: impl Fn(f64) -> (f64, f64)) -> Trace {
        let mut tr = Trace::new(1, ts);
        for k in 0..steps {
            let t = k as f64 * ts;
            let (is, ia_des) = f(t);
            tr.rows.push(TraceRow {
                t,
                i1: is / 2.0,
                i2: is / 2.0,
                is,
                id: 0.0,
                v1: 0.0,
                v2: 0.0,
                vc: vec![0.0, 0.0],
                vc1_bar: 0.0,
                vc2_bar: 0.0,
                vc12_des: 0.0,
                ia_des,
                id_des: 0.0,
                n1: 0,
                n2: 0,
                objective: 0.0,
            });
        }
        tr
    }

    const OMEGA: f64 = 2.0 * PI * 50.0;
    const TS: f64 = 1e-4;

    #[test]
    fn zero_error_gives_zero_metrics() {
        let tr = synthetic_trace(TS, 400, |t| {
            let v = 1.5 * (OMEGA * t).sin();
            (v, v)
        });
        let (rms, max) = tracking_metrics(&tr, 0.0, 0.04).unwrap();
        assert_eq!((rms, max), (0.0, 0.0));
    }

    #[test]
    fn sinusoid_rms_is_amplitude_over_sqrt2() {
        let tr = synthetic_trace(TS, 200, |t| (0.0, 0.002 * (OMEGA * t).sin()));
        let (rms, max) = tracking_metrics(&tr, 0.0, 0.02).unwrap();
        assert!((rms - 0.002 / 2.0f64.sqrt()).abs() < 1e-12);
        assert!((max - 0.002).abs() < 1e-9);
        assert!(rms <= max);
    }

    #[test]
    fn empty_window_rejected() {
        let tr = synthetic_trace(TS, 10, |_| (0.0, 0.0));
        assert!(tracking_metrics(&tr, 5.0, 6.0).is_err());
    }

    #[test]
    fn pure_sinusoid_spectrum() {
        let tr = synthetic_trace(TS, 200, |t| (1.5 * (OMEGA * t).sin(), 0.0));
        let (a1, thd, avg) = spectrum_metrics(&tr, 0.0, 0.02, OMEGA).unwrap();
        assert!((a1 - 1.5).abs() < 1e-10);
        assert!(thd < 1e-10);
        // One nonzero bin out of 100.
        assert!((avg - 1.5 / 100.0).abs() < 1e-9);
    }

    #[test]
    fn harmonic_mix_thd() {
        // A1 = 2, A3 = 0.5 -> THD = 0.25.
        let tr = synthetic_trace(TS, 200, |t| {
            (2.0 * (OMEGA * t).sin() + 0.5 * (3.0 * OMEGA * t).cos(), 0.0)
        });
        let (a1, thd, _) = spectrum_metrics(&tr, 0.0, 0.02, OMEGA).unwrap();
        assert!((a1 - 2.0).abs() < 1e-10);
        assert!((thd - 0.25).abs() < 1e-10);
    }

    #[test]
    fn dc_only_is_error() {
        let tr = synthetic_trace(TS, 200, |_| (3.0, 0.0));
        assert!(spectrum_metrics(&tr, 0.0, 0.02, OMEGA).is_err());
    }

    #[test]
    fn wrong_window_length_rejected() {
        let tr = synthetic_trace(TS, 400, |t| ((OMEGA * t).sin(), 0.0));
        assert!(spectrum_metrics(&tr, 0.0, 0.04, OMEGA).is_err());
        assert!(spectrum_metrics(&tr, 0.0, 0.02, OMEGA).is_ok());
    }

    #[test]
    fn metrics_invariant_to_whole_period_shift() {
        let f = |t: f64| {
            (
                1.2 * (OMEGA * t).sin() + 0.1 * (2.0 * OMEGA * t).sin(),
                1.2 * (OMEGA * t).sin(),
            )
        };
        let tr = synthetic_trace(TS, 800, f);
        let m0 = report(&tr, 0.0, 0.02, OMEGA).unwrap();
        let m2 = report(&tr, 0.04, 0.06, OMEGA).unwrap();
        assert!((m0.rms_e_ia - m2.rms_e_ia).abs() < 1e-9);
        assert!((m0.thd - m2.thd).abs() < 1e-9);
        assert!((m0.fundamental_amplitude - m2.fundamental_amplitude).abs() < 1e-9);
    }

    proptest! {
        // Parseval: mean square of the samples equals the bin-energy sum
        // under the single-sided normalization.
        #[test]
        fn parseval_identity(
            a1 in 0.0..5.0f64,
            a2 in 0.0..2.0f64,
            p1 in -PI..PI,
            dc in -1.0..1.0f64,
        ) {
            let n = 200;
            let samples: Vec<f64> = (0..n)
                .map(|k| {
                    let t = k as f64 * TS;
                    dc + a1 * (OMEGA * t + p1).sin() + a2 * (3.0 * OMEGA * t).cos()
                })
                .collect();
            let spec = amplitude_spectrum(&samples);
            let mean_sq: f64 = samples.iter().map(|x| x * x).sum::<f64>() / n as f64;
            let mut bins = spec[0] * spec[0];
            for (k, a) in spec.iter().enumerate().skip(1) {
                // The Nyquist bin of an even-length transform has no
                // conjugate partner, so its energy is A^2/4 under the
                // doubled-amplitude convention.
                bins += if 2 * k == n { a * a / 4.0 } else { a * a / 2.0 };
            }
            prop_assert!((mean_sq - bins).abs() <= 1e-9 * mean_sq.max(1e-12));
        }
    }
}
