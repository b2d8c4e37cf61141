//! Compression-ratio versus relative-error sweeps.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::compress::{compress, report, Method};
use crate::error::{Error, Result};
use crate::io::RawTensor;
use crate::transform::TransformKind;

/// One sweep cell: a method with its parameters and a transform kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub method: Method,
    pub transform: TransformKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: String,
    pub transform: String,
    pub parameter: String,
    pub cr: f64,
    pub re: f64,
    pub seconds: f64,
    pub payload_floats: usize,
    pub integers: usize,
    /// `ok`, or `failed: <message>`.
    pub status: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

fn run_cell(a: &RawTensor, cell: &Cell, seed: u64, conjsym: bool) -> SweepRow {
    let start = Instant::now();
    let result = compress(a, &cell.method, cell.transform, seed).and_then(|rep| report(a, &cell.method, &rep, conjsym));
    let seconds = start.elapsed().as_secs_f64();
    let mut row = SweepRow {
        method: cell.method.tag().name().to_string(),
        transform: if cell.method.uses_transform() { cell.transform.short_name() } else { "none" }.to_string(),
        parameter: cell.method.parameter(),
        cr: f64::NAN,
        re: f64::NAN,
        seconds,
        payload_floats: 0,
        integers: 0,
        status: "ok".into(),
    };
    match result {
        Ok(r) => {
            row.cr = r.compression_ratio;
            row.re = r.relative_error;
            row.payload_floats = r.payload.floats;
            row.integers = r.payload.integers;
        }
        Err(e) => row.status = format!("failed: {e}"),
    }
    row
}

/// Runs every cell (concurrently); rows come back in cell order. A failing
/// cell yields a row marked failed rather than aborting the sweep.
pub fn sweep(a: &RawTensor, cells: &[Cell], seed: u64, conjsym: bool) -> Vec<SweepRow> {
    cells.par_iter().map(|c| run_cell(a, c, seed, conjsym)).collect()
}

/// Comma-separated output with one header row.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a comma-separated list of numbers such as `0.9,0.95,0.99`, or
/// an inclusive range `lo:hi:step`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidInput(format!("bad parameter grid '{s}'"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
        let (lo, hi, step) = (v[0], v[1], v[2]);
        if !(step > 0.0) || hi < lo {
            return Err(bad());
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| lo + step * i as f64).collect());
    }
    s.split(',').filter(|p| !p.trim().is_empty()).map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect()
}
