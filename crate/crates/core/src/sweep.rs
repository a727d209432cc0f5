//! Scenario sweeps: run a batch of closed-loop operating points and reduce
//! each to its tracking metrics. Points are independent, so the batch runs
//! on a worker pool when the `parallel` feature is enabled; a sequential
//! path is always available and produces identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::analysis;
use crate::controller::{ReferenceMode, ReferenceSchedule};
use crate::error::Result;
use crate::sim::{run_closed_loop, Scenario};

/// One operating point of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    /// Load-current amplitude [A], held constant for the whole point.
    pub amplitude: f64,
    pub reference: ReferenceMode,
}

/// Metrics of one completed sweep point.
#[derive(Clone, Copy, Debug)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub rms_e_ia: f64,
    pub max_abs_e_ia: f64,
    pub thd: f64,
}

/// Periods allowed for transients before metrics are taken.
pub const SETTLE_PERIODS: usize = 15;
/// Periods included in the metric window.
pub const MEASURE_PERIODS: usize = 2;

/// Run one sweep point derived from a base scenario.
pub fn run_point(base: &Scenario, point: &SweepPoint) -> Result<SweepRow> {
    let mut sc = base.clone();
    let period = 2.0 * std::f64::consts::PI / sc.params.omega;
    sc.schedule = ReferenceSchedule::constant(point.amplitude, sc.params.omega);
    sc.reference_mode = point.reference;
    sc.duration = (SETTLE_PERIODS + MEASURE_PERIODS) as f64 * period;
    let trace = run_closed_loop(&sc)?;
    let t0 = SETTLE_PERIODS as f64 * period;
    let t1 = t0 + MEASURE_PERIODS as f64 * period;
    let (rms_e_ia, max_abs_e_ia) = analysis::tracking_metrics(&trace, t0, t1)?;
    let (_, thd, _) = analysis::spectrum_metrics(&trace, t0, t0 + period, sc.params.omega)?;
    Ok(SweepRow {
        point: *point,
        rms_e_ia,
        max_abs_e_ia,
        thd,
    })
}

/// Sequential sweep. Always available.
pub fn run_sweep_serial(base: &Scenario, points: &[SweepPoint]) -> Result<Vec<SweepRow>> {
    points.iter().map(|p| run_point(base, p)).collect()
}

/// Data-parallel sweep over the rayon worker pool.
#[cfg(feature = "parallel")]
pub fn run_sweep_parallel(base: &Scenario, points: &[SweepPoint]) -> Result<Vec<SweepRow>> {
    points.par_iter().map(|p| run_point(base, p)).collect()
}

/// Parallel when compiled in, sequential otherwise.
pub fn run_sweep(base: &Scenario, points: &[SweepPoint]) -> Result<Vec<SweepRow>> {
    #[cfg(feature = "parallel")]
    {
        run_sweep_parallel(base, points)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_sweep_serial(base, points)
    }
}

/// Standard amplitude grid paired with both reference modes; the constant
/// mode is pinned at `constant_ref` volts.
pub fn amplitude_grid(amplitudes: &[f64], constant_ref: f64) -> Vec<SweepPoint> {
    let mut points = Vec::with_capacity(2 * amplitudes.len());
    for &amplitude in amplitudes {
        points.push(SweepPoint {
            amplitude,
            reference: ReferenceMode::Optimal,
        });
        points.push(SweepPoint {
            amplitude,
            reference: ReferenceMode::Constant(constant_ref),
        });
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serial_sweep_produces_finite_metrics() {
        let base = Scenario::table2();
        let points = amplitude_grid(&[1.5], 61.4);
        let rows = run_sweep_serial(&base, &points).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert!(r.rms_e_ia.is_finite() && r.rms_e_ia >= 0.0);
            assert!(r.max_abs_e_ia >= r.rms_e_ia);
            assert!(r.thd >= 0.0);
        }
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_serial_bitwise() {
        let base = Scenario::table2();
        let points = amplitude_grid(&[0.75, 1.5], 61.4);
        let serial = run_sweep_serial(&base, &points).unwrap();
        let parallel = run_sweep_parallel(&base, &points).unwrap();
        assert_eq!(serial.len(), parallel.len());
        for (s, p) in serial.iter().zip(&parallel) {
            assert_eq!(s.point, p.point);
            assert_eq!(s.rms_e_ia.to_bits(), p.rms_e_ia.to_bits());
            assert_eq!(s.max_abs_e_ia.to_bits(), p.max_abs_e_ia.to_bits());
            assert_eq!(s.thd.to_bits(), p.thd.to_bits());
        }
    }
}
