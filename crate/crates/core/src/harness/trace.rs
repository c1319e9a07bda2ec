//! Per-round CSV traces.
//!
//! Floats are written as `{:.16e}`, seventeen significant digits, so every
//! value reads back bit-exactly.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Format { line: 0, message: format!("{other:?}") },
    }
}

/// One bandit round as written to a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditRow {
    pub t: u64,
    pub arm: usize,
    pub loss: f64,
    pub cumulative_loss: f64,
    pub comparator_loss: f64,
    pub cumulative_regret: f64,
    pub threshold: f64,
}

/// One MDP episode as written to a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpRow {
    pub t: u64,
    /// `learn` or `explore:<target>`.
    pub phase: String,
    pub trajectory: u64,
    pub loss: f64,
    pub expected_loss: f64,
    pub cumulative_loss: f64,
    pub comparator_loss: f64,
    pub cumulative_regret: f64,
    pub thresholds: Vec<f64>,
}

pub struct TraceWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TraceWriter<W> {
    pub fn bandit(w: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(w);
        inner
            .write_record(["t", "arm", "loss", "cumulative_loss", "comparator_loss", "cumulative_regret", "threshold"])
            .map_err(csv_error)?;
        Ok(TraceWriter { inner })
    }

    pub fn mdp(w: W, horizon: usize) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(w);
        let mut header: Vec<String> = [
            "t",
            "phase",
            "trajectory",
            "loss",
            "expected_loss",
            "cumulative_loss",
            "comparator_loss",
            "cumulative_regret",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend((1..=horizon).map(|h| format!("threshold_{h}")));
        inner.write_record(&header).map_err(csv_error)?;
        Ok(TraceWriter { inner })
    }

    pub fn write_bandit(&mut self, r: &BanditRow) -> Result<()> {
        self.inner
            .write_record([
                r.t.to_string(),
                r.arm.to_string(),
                format_float(r.loss),
                format_float(r.cumulative_loss),
                format_float(r.comparator_loss),
                format_float(r.cumulative_regret),
                format_float(r.threshold),
            ])
            .map_err(csv_error)
    }

    pub fn write_mdp(&mut self, r: &MdpRow) -> Result<()> {
        let mut rec = vec![
            r.t.to_string(),
            r.phase.clone(),
            format!("{:016x}", r.trajectory),
            format_float(r.loss),
            format_float(r.expected_loss),
            format_float(r.cumulative_loss),
            format_float(r.comparator_loss),
            format_float(r.cumulative_regret),
        ];
        rec.extend(r.thresholds.iter().map(|c| format_float(*c)));
        self.inner.write_record(&rec).map_err(csv_error)
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// Reads the `t` and `cumulative_regret` columns of any trace.
pub fn read_regret_series<R: Read>(r: R) -> Result<Vec<(u64, f64)>> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers().map_err(csv_error)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format { line: 1, message: format!("missing column `{name}`") })
    };
    let (ti, ri) = (col("t")?, col("cumulative_regret")?);
    let mut out = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = k + 2;
        let bad = |what: &str| Error::Format { line, message: format!("unparsable {what}") };
        let t = rec.get(ti).and_then(|s| s.parse().ok()).ok_or_else(|| bad("t"))?;
        let r = rec.get(ri).and_then(|s| s.parse().ok()).ok_or_else(|| bad("cumulative_regret"))?;
        out.push((t, r));
    }
    Ok(out)
}
