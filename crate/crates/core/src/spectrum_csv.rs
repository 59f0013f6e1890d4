//! Spectrum CSV: `delta_rad_s,delta_over_omega_b,re_eps_t,im_eps_t`.
//!
//! Values are written in the shortest form that parses back to the same
//! `f64`, so a write/read cycle is lossless.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::response::ProbeResponse;

pub const HEADER: [&str; 4] = ["delta_rad_s", "delta_over_omega_b", "re_eps_t", "im_eps_t"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    pub delta: f64,
    pub delta_over_omega_b: f64,
    pub re_eps_t: f64,
    pub im_eps_t: f64,
}

impl From<&ProbeResponse> for SpectrumRow {
    fn from(r: &ProbeResponse) -> Self {
        Self {
            delta: r.delta,
            delta_over_omega_b: r.delta_over_omega_b(),
            re_eps_t: r.absorption,
            im_eps_t: r.dispersion,
        }
    }
}

pub fn write_spectrum<W: Write>(out: W, rows: &[SpectrumRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            format!("{:e}", r.delta),
            format!("{:e}", r.delta_over_omega_b),
            format!("{:e}", r.re_eps_t),
            format!("{:e}", r.im_eps_t),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a spectrum CSV. The header must match [`HEADER`] exactly and every
/// field must be a finite number.
pub fn read_spectrum<R: Read>(input: R) -> Result<Vec<SpectrumRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers().map_err(csv_err)?;
    if header.iter().ne(HEADER) {
        return Err(Error::Parse(format!(
            "expected header {}, got {}",
            HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let mut v = [0.0; 4];
        for (k, slot) in v.iter_mut().enumerate() {
            let field = rec.get(k).unwrap_or_default().trim();
            let x: f64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: {} is not a number: {field:?}", line + 1, HEADER[k])))?;
            if !x.is_finite() {
                return Err(Error::Parse(format!("row {}: {} is not finite", line + 1, HEADER[k])));
            }
            *slot = x;
        }
        rows.push(SpectrumRow {
            delta: v[0],
            delta_over_omega_b: v[1],
            re_eps_t: v[2],
            im_eps_t: v[3],
        });
    }
    Ok(rows)
}

/// ω_b recovered from δ = ω_b(1 + x), using the row where 1 + x is
/// largest in magnitude.
pub fn omega_b_of(rows: &[SpectrumRow]) -> Result<f64> {
    let best = rows
        .iter()
        .max_by(|a, b| (1.0 + a.delta_over_omega_b).abs().total_cmp(&(1.0 + b.delta_over_omega_b).abs()))
        .ok_or_else(|| Error::Parse("spectrum has no rows".into()))?;
    let w = best.delta / (1.0 + best.delta_over_omega_b);
    if w.is_finite() && w > 0.0 {
        Ok(w)
    } else {
        Err(Error::Parse("cannot recover omega_b from the spectrum".into()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Parse(format!("{other:?}")),
        }
    } else {
        Error::Parse(e.to_string())
    }
}
