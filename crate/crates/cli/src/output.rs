//! CSV and JSON emission.
//!
//! Reals in CSV are written with 17 significant digits (`{:.16e}`), which
//! parses back to the same `f64`. JSON uses the shortest representation
//! that round-trips.

use std::fmt::Write as _;

use glauber_core::{ModelParams, Result};
use serde::Serialize;

use crate::args::CurveKind;

/// A real formatted for CSV.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Accumulates a CSV body with `\n` line endings.
#[derive(Debug)]
pub struct Csv {
    body: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut csv = Csv {
            body: String::new(),
            columns: header.len(),
        };
        csv.push_row(header.iter().map(|h| h.to_string()));
        csv
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.push_row(fields.into_iter().map(Into::into));
    }

    fn push_row(&mut self, fields: impl Iterator<Item = String>) {
        let fields: Vec<String> = fields.collect();
        debug_assert_eq!(fields.len(), self.columns, "ragged CSV row");
        let _ = writeln!(self.body, "{}", fields.join(","));
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.body.into_bytes()
    }
}

pub fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("result types serialize");
    bytes.push(b'\n');
    bytes
}

/// Samples of a curve on the uniform grid `c_i = i / (samples - 1)`, both
/// endpoints included. `phi` at `c = 0, 1` takes the `0 ln 0 = 0` limit.
pub fn emit_curve(
    what: CurveKind,
    params: &ModelParams,
    samples: usize,
) -> Result<Vec<(f64, f64)>> {
    if samples < 2 {
        return Err(glauber_core::Error::Domain(format!(
            "a curve needs at least 2 samples, got {samples}"
        )));
    }
    let last = (samples - 1) as f64;
    (0..samples)
        .map(|i| {
            let c = i as f64 / last;
            let value = match what {
                CurveKind::Lambda => params.lambda(c)?,
                CurveKind::Phi => params.phi(c)?,
                CurveKind::LambdaMinusIdentity => params.lambda(c)? - c,
            };
            Ok((c, value))
        })
        .collect()
}

pub fn curve_csv(points: &[(f64, f64)]) -> Csv {
    let mut csv = Csv::new(&["c", "value"]);
    for &(c, v) in points {
        csv.row([real(c), real(v)]);
    }
    csv
}
