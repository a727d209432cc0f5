//! Uniformly sampled simulation traces and their CSV serialization.
//!
//! Values are written with 17 significant digits so a written trace parses
//! back to bit-identical floats.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// One sample per control period.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub i1: f64,
    pub i2: f64,
    pub is: f64,
    pub id: f64,
    pub v1: f64,
    pub v2: f64,
    /// 2n capacitor voltages, upper arm first.
    pub vc: Vec<f64>,
    pub vc1_bar: f64,
    pub vc2_bar: f64,
    pub vc12_des: f64,
    pub ia_des: f64,
    pub id_des: f64,
    pub n1: usize,
    pub n2: usize,
    pub objective: f64,
}

/// Time series sampled at the control period.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    /// Capacitors per arm.
    pub n: usize,
    pub ts: f64,
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn new(n: usize, ts: f64) -> Self {
        Self {
            n,
            ts,
            rows: Vec::new(),
        }
    }

    /// Samples with t in the half-open window [t0, t1).
    pub fn window(&self, t0: f64, t1: f64) -> &[TraceRow] {
        // Half the sample period absorbs accumulated rounding in t.
        let eps = self.ts / 2.0;
        let start = self.rows.partition_point(|r| r.t < t0 - eps);
        let end = self.rows.partition_point(|r| r.t < t1 - eps);
        &self.rows[start..end]
    }

    fn header(&self) -> String {
        let mut cols = vec![
            "t".to_string(),
            "i1".into(),
            "i2".into(),
            "is".into(),
            "id".into(),
            "v1".into(),
            "v2".into(),
        ];
        for i in 0..2 * self.n {
            cols.push(format!("vc{i}"));
        }
        cols.extend(
            [
                "vc1_bar", "vc2_bar", "vc12_des", "ia_des", "id_des", "n1", "n2", "j",
            ]
            .map(String::from),
        );
        cols.join(",")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "{}", self.header())?;
        for r in &self.rows {
            write!(out, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.t, r.i1, r.i2, r.is, r.id, r.v1, r.v2)?;
            for v in &r.vc {
                write!(out, ",{v:.16e}")?;
            }
            writeln!(
                out,
                ",{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{:.16e}",
                r.vc1_bar, r.vc2_bar, r.vc12_des, r.ia_des, r.id_des, r.n1, r.n2, r.objective
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Trace> {
        let parse_err = |line: usize, message: String| Error::Parse {
            context: format!("{}:{}", path.display(), line),
            message,
        };
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut lines = reader.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty file".into()))?;
        let header = header?;
        let cols: Vec<&str> = header.split(',').collect();
        // Fixed layout: 7 leading columns, 2n voltages, 8 trailing columns.
        if cols.len() < 16 || (cols.len() - 15) % 2 != 0 {
            return Err(parse_err(1, format!("unexpected column count {}", cols.len())));
        }
        let n = (cols.len() - 15) / 2;
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(parse_err(
                    idx + 1,
                    format!("expected {} fields, got {}", cols.len(), fields.len()),
                ));
            }
            let f = |i: usize| -> Result<f64> {
                fields[i]
                    .parse()
                    .map_err(|e| parse_err(idx + 1, format!("field {i}: {e}")))
            };
            let u = |i: usize| -> Result<usize> {
                fields[i]
                    .parse()
                    .map_err(|e| parse_err(idx + 1, format!("field {i}: {e}")))
            };
            let mut vc = Vec::with_capacity(2 * n);
            for i in 0..2 * n {
                vc.push(f(7 + i)?);
            }
            let base = 7 + 2 * n;
            rows.push(TraceRow {
                t: f(0)?,
                i1: f(1)?,
                i2: f(2)?,
                is: f(3)?,
                id: f(4)?,
                v1: f(5)?,
                v2: f(6)?,
                vc,
                vc1_bar: f(base)?,
                vc2_bar: f(base + 1)?,
                vc12_des: f(base + 2)?,
                ia_des: f(base + 3)?,
                id_des: f(base + 4)?,
                n1: u(base + 5)?,
                n2: u(base + 6)?,
                objective: f(base + 7)?,
            });
        }
        let ts = if rows.len() >= 2 {
            rows[1].t - rows[0].t
        } else {
            0.0
        };
        Ok(Trace { n, ts, rows })
    }
}
