//! Per-step solver records and their CSV export.

use std::io::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Serious,
    Null,
}

impl StepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StepKind::Serious => "serious",
            StepKind::Null => "null",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Outer (serious-step) counter, starting at 1.
    pub j: usize,
    /// Inner counter within the current serious step, starting at 1.
    pub k: usize,
    pub kind: StepKind,
    /// The trial point `z`.
    pub x: Vec<f64>,
    /// `f(z)`.
    pub f: f64,
    /// `f` at the serious iterate the inner loop is anchored at.
    pub f_anchor: f64,
    pub rho: f64,
    /// Only computed on null steps; NaN otherwise.
    pub rho_tilde: f64,
    /// Trust-region radius used for this trial.
    pub radius: f64,
    /// Norm of the constraint-reduced aggregate subgradient.
    pub g_norm: f64,
    /// Working-model value at the tangent-program solution.
    pub model_y: f64,
    /// Working-model value at the trial point.
    pub model_z: f64,
    /// Planes in the bundle after processing this step.
    pub planes: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
}

impl SolverTrace {
    pub fn push(&mut self, r: TraceRecord) {
        self.records.push(r);
    }

    pub fn serious(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(|r| r.kind == StepKind::Serious)
    }

    pub fn nulls(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(|r| r.kind == StepKind::Null)
    }

    pub const CSV_HEADER: [&'static str; 8] =
        ["j", "k", "kind", "f", "rho", "rho_tilde", "R", "g_norm"];

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        wr.write_record(Self::CSV_HEADER).map_err(io)?;
        for r in &self.records {
            wr.write_record([
                r.j.to_string(),
                r.k.to_string(),
                r.kind.as_str().to_string(),
                fmt_float(r.f),
                fmt_float(r.rho),
                fmt_float(r.rho_tilde),
                fmt_float(r.radius),
                fmt_float(r.g_norm),
            ])
            .map_err(io)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }
}

/// 17 significant digits, round-trip exact.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{:.16e}", v)
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_exact() {
        let t = SolverTrace::default();
        assert_eq!(t.to_csv_string().unwrap(), "j,k,kind,f,rho,rho_tilde,R,g_norm\n");
    }

    #[test]
    fn float_format_roundtrips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 12345.678901234567, 0.0] {
            let s = fmt_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            assert!(!s.contains(','));
        }
        assert_eq!(fmt_float(f64::NAN), "nan");
    }

    #[test]
    fn csv_rows() {
        let mut t = SolverTrace::default();
        t.push(TraceRecord {
            j: 1,
            k: 2,
            kind: StepKind::Null,
            x: vec![0.0],
            f: 1.5,
            f_anchor: 2.0,
            rho: -0.5,
            rho_tilde: 1.0,
            radius: 0.25,
            g_norm: 3.0,
            model_y: 0.0,
            model_z: 0.0,
            planes: 2,
        });
        let s = t.to_csv_string().unwrap();
        let line = s.lines().nth(1).unwrap();
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 8);
        assert_eq!(fields[2], "null");
        assert_eq!(fields[6].parse::<f64>().unwrap(), 0.25);
    }
}
