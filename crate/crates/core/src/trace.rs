//! Per-step training records and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 9] = [
    "step",
    "sweep",
    "subdomain",
    "energy",
    "energy_error",
    "l2_error",
    "rel_energy_change",
    "grad_norm",
    "wall_time_s",
];

/// One row of a training trace. `sweep` and `subdomain` are `-1` outside a
/// domain-decomposition run; `subdomain` is 1-based inside one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub step: u64,
    pub sweep: i64,
    pub subdomain: i64,
    pub energy: f64,
    pub energy_error: f64,
    pub l2_error: f64,
    pub rel_energy_change: f64,
    pub grad_norm: f64,
    pub wall_time_s: f64,
}

/// Training history. Row 0 is the starting state; every later row is one
/// accepted optimizer iteration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingTrace {
    pub rows: Vec<TraceRow>,
    /// Energy at the end of each sweep (domain decomposition only).
    pub sweep_end_energies: Vec<f64>,
}

/// `|E_t − E_{t−1}| / |E_{t−1}|`.
pub fn relative_change(previous: f64, current: f64) -> f64 {
    (current - previous).abs() / previous.abs()
}

impl TrainingTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.energy).collect()
    }

    /// Appends a row, assigning the next step index and the relative change.
    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        sweep: i64,
        subdomain: i64,
        energy: f64,
        energy_error: f64,
        l2_error: f64,
        grad_norm: f64,
        wall_time_s: f64,
    ) {
        let (step, rel) = match self.rows.last() {
            Some(prev) => (prev.step + 1, relative_change(prev.energy, energy)),
            None => (0, 0.0),
        };
        self.rows.push(TraceRow {
            step,
            sweep,
            subdomain,
            energy,
            energy_error,
            l2_error,
            rel_energy_change: rel,
            grad_norm,
            wall_time_s,
        });
    }

    /// Writes the CSV form: fixed header, one row per record, LF endings.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::Config("cannot emit an empty trace".into()));
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.step.to_string(),
                r.sweep.to_string(),
                r.subdomain.to_string(),
                fmt_real(r.energy),
                fmt_real(r.energy_error),
                fmt_real(r.l2_error),
                fmt_real(r.rel_energy_change),
                fmt_real(r.grad_norm),
                fmt_real(r.wall_time_s),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rd.headers()?.clone();
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(Error::Config(format!("unexpected trace header: {header:?}")));
        }
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let real = |i: usize| -> Result<f64> {
                rec[i]
                    .parse()
                    .map_err(|_| Error::Config(format!("bad number {:?} in column {}", &rec[i], CSV_HEADER[i])))
            };
            let int = |i: usize| -> Result<i64> {
                rec[i]
                    .parse()
                    .map_err(|_| Error::Config(format!("bad integer {:?} in column {}", &rec[i], CSV_HEADER[i])))
            };
            rows.push(TraceRow {
                step: int(0)? as u64,
                sweep: int(1)?,
                subdomain: int(2)?,
                energy: real(3)?,
                energy_error: real(4)?,
                l2_error: real(5)?,
                rel_energy_change: real(6)?,
                grad_norm: real(7)?,
                wall_time_s: real(8)?,
            });
        }
        Ok(Self {
            rows,
            sweep_end_energies: Vec::new(),
        })
    }
}

/// 17 significant digits in base-10 exponent form; round-trips exactly.
fn fmt_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Writes `trace` to `path` as CSV.
pub fn emit_trace(trace: &TrainingTrace, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    trace.write_csv(std::io::BufWriter::new(file))
}
