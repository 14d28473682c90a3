//! Per-round metrics and their CSV form.
//!
//! The header is fixed:
//! `run_id,algo,case_seed,t,grad_norm_sq,loss,uplink_bits_cum,downlink_bits_cum`.
//! Row `t` describes the state after round `t`: the exact gradient and the
//! noiseless loss at the server iterate `x_{t+1}`, and the payload bits sent
//! in rounds `1..=t`. Floats are written in shortest round-trip form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const CSV_HEADER: [&str; 8] = [
    "run_id",
    "algo",
    "case_seed",
    "t",
    "grad_norm_sq",
    "loss",
    "uplink_bits_cum",
    "downlink_bits_cum",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub run_id: String,
    pub algo: String,
    pub case_seed: u64,
    pub t: u64,
    pub grad_norm_sq: f64,
    pub loss: f64,
    pub uplink_bits_cum: u64,
    pub downlink_bits_cum: u64,
}

/// Writes the header and then `rows`. The header is written even when
/// `rows` is empty.
pub fn write_csv<W: Write>(out: W, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(crate::error::SimError::Format {
            what: "metrics CSV",
            detail: format!("unexpected header {header:?}"),
        });
    }
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// The last `grad_norm_sq` among rows whose cumulative uplink does not
/// exceed `budget`, or `None` if even the first round costs more.
pub fn grad_norm_at_uplink_budget(rows: &[MetricsRow], budget: u64) -> Option<f64> {
    rows.iter()
        .take_while(|r| r.uplink_bits_cum <= budget)
        .last()
        .map(|r| r.grad_norm_sq)
}
