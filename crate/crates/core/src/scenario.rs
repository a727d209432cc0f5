//! Scenario files: a flat key/value format with [params], [gains],
//! [schedule] and [run] sections. Every key has a built-in default (the
//! closed-loop study configuration), so an empty file is a valid scenario.
//!
//! Angles are radians, frequencies rad/s; `frequency_hz` is accepted as a
//! convenience and converted. Lines starting with `#` or `;` are comments.

use std::path::Path;

use crate::controller::{ReferenceMode, ReferenceSchedule};
use crate::error::{Error, Result};
use crate::model::FullState;
use crate::sim::{PlantIntegrator, Scenario};

fn parse_err(context: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        context: context.into(),
        message: message.into(),
    }
}

/// Parse `optimal` or `constant:VALUE`.
pub fn parse_reference_mode(s: &str) -> Result<ReferenceMode> {
    let s = s.trim();
    if s == "optimal" {
        return Ok(ReferenceMode::Optimal);
    }
    if let Some(v) = s.strip_prefix("constant:") {
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|e| parse_err("reference mode", format!("bad constant value {v:?}: {e}")))?;
        if !(value > 0.0) {
            return Err(parse_err(
                "reference mode",
                format!("constant reference must be positive, got {value}"),
            ));
        }
        return Ok(ReferenceMode::Constant(value));
    }
    Err(parse_err(
        "reference mode",
        format!("expected 'optimal' or 'constant:VALUE', got {s:?}"),
    ))
}

/// Parse scenario text. `origin` labels error messages (usually the path).
pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario> {
    let mut sc = Scenario::table2();
    let mut schedule_entries: Vec<(f64, f64)> = Vec::new();
    let mut initial_vc: Option<f64> = None;
    let mut section = String::new();

    for (idx, raw) in text.lines().enumerate() {
        let ctx = format!("{origin}:{}", idx + 1);
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_lowercase();
            if !matches!(section.as_str(), "params" | "gains" | "schedule" | "run") {
                return Err(parse_err(ctx, format!("unknown section [{section}]")));
            }
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(&ctx, format!("expected 'key = value', got {line:?}")))?;
        let key = key.trim().to_lowercase();
        let value = value.trim();
        let num = |v: &str| -> Result<f64> {
            v.parse()
                .map_err(|e| parse_err(&ctx, format!("bad number {v:?} for {key}: {e}")))
        };
        match (section.as_str(), key.as_str()) {
            ("params", "l") => sc.params.l = num(value)?,
            ("params", "r") => sc.params.r = num(value)?,
            ("params", "c") => sc.params.c = num(value)?,
            ("params", "n") => {
                sc.params.n = value
                    .parse()
                    .map_err(|e| parse_err(&ctx, format!("bad integer {value:?} for n: {e}")))?
            }
            ("params", "la") => sc.params.la = num(value)?,
            ("params", "ra") => sc.params.ra = num(value)?,
            ("params", "vdc") => sc.params.vdc = num(value)?,
            ("params", "va_m") => sc.params.va_m = num(value)?,
            ("params", "alpha_va") => sc.params.alpha_va = num(value)?,
            ("params", "omega") => sc.params.omega = num(value)?,
            ("params", "frequency_hz") => {
                sc.params.omega = 2.0 * std::f64::consts::PI * num(value)?
            }
            ("params", "ts") => sc.params.ts = num(value)?,
            ("gains", "kd_m") => sc.gains.kd_m = num(value)?,
            ("gains", "kd0") => sc.gains.kd0 = num(value)?,
            ("gains", "tau") => sc.gains.tau = num(value)?,
            ("gains", "alpha1") => sc.gains.alpha1 = num(value)?,
            ("gains", "alpha2") => sc.gains.alpha2 = num(value)?,
            ("gains", "wn") => {
                sc.gains.wn = value
                    .parse()
                    .map_err(|e| parse_err(&ctx, format!("bad integer {value:?} for wn: {e}")))?
            }
            ("schedule", "at") => {
                let mut parts = value.split_whitespace();
                let (t, a) = (parts.next(), parts.next());
                match (t, a, parts.next()) {
                    (Some(t), Some(a), None) => schedule_entries.push((num(t)?, num(a)?)),
                    _ => {
                        return Err(parse_err(
                            ctx,
                            format!("expected 'at = TIME AMPLITUDE', got {value:?}"),
                        ))
                    }
                }
            }
            ("run", "duration") => sc.duration = num(value)?,
            ("run", "reference") => sc.reference_mode = parse_reference_mode(value)?,
            ("run", "integrator") => {
                sc.integrator = match value {
                    "rk4" => PlantIntegrator::Rk4InnerStep,
                    "euler" => PlantIntegrator::EulerTs,
                    other => {
                        return Err(parse_err(
                            ctx,
                            format!("integrator must be 'rk4' or 'euler', got {other:?}"),
                        ))
                    }
                }
            }
            ("run", "seed") => {
                sc.seed = value
                    .parse()
                    .map_err(|e| parse_err(&ctx, format!("bad integer {value:?} for seed: {e}")))?
            }
            ("run", "initial_vc") => initial_vc = Some(num(value)?),
            ("", k) => {
                return Err(parse_err(
                    ctx,
                    format!("key {k:?} appears before any [section] header"),
                ))
            }
            (s, k) => return Err(parse_err(ctx, format!("unknown key {k:?} in [{s}]"))),
        }
    }

    if !schedule_entries.is_empty() {
        sc.schedule = ReferenceSchedule {
            entries: schedule_entries,
            omega: sc.params.omega,
        };
    } else {
        sc.schedule.omega = sc.params.omega;
    }
    // Default initial voltage balances the DC link across each arm.
    let vc0 = initial_vc.unwrap_or(sc.params.vdc / sc.params.n as f64);
    sc.initial = FullState::uniform(sc.params.n, vc0);
    sc.validate()?;
    Ok(sc)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        parse_err(
            path.display().to_string(),
            format!("cannot read scenario file: {e}"),
        )
    })?;
    parse_scenario(&text, &path.display().to_string())
}
