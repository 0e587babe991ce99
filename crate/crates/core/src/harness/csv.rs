//! Sweep results as CSV.
//!
//! Schema, one row per `(k, algorithm)`:
//!
//! ```text
//! n,m,k,k_over_n,algorithm,dist,omega,trials,successes,success_rate,mean_overlap,master_seed
//! ```
//!
//! Floats carry 6 significant digits; lines end in `\n`.

use std::io::{Read, Write};

use super::{Algorithm, SweepResult};
use crate::error::{Error, Result};
use crate::signals::AmplitudeModel;

pub const HEADER: &str =
    "n,m,k,k_over_n,algorithm,dist,omega,trials,successes,success_rate,mean_overlap,master_seed";

/// `%.6g`-style formatting.
pub(crate) fn fmt_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    fn strip(s: &str) -> &str {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.')
        } else {
            s
        }
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip(mantissa), exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        strip(&format!("{v:.decimals$}")).to_string()
    }
}

/// Writes all rows of `results`, sorted by `k` then algorithm.
pub fn write_csv<W: Write>(results: &[SweepResult], mut out: W) -> Result<()> {
    let mut lines: Vec<(usize, Algorithm, String)> = Vec::new();
    for res in results {
        let c = &res.config;
        for r in &res.rows {
            let line = format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                c.n,
                c.m,
                r.k,
                fmt_sig6(r.k_over_n),
                c.algorithm.label(),
                c.model.label(),
                fmt_sig6(c.omega),
                r.trials,
                r.successes,
                fmt_sig6(r.success_rate),
                fmt_sig6(r.mean_overlap),
                c.master_seed
            );
            lines.push((r.k, c.algorithm, line));
        }
    }
    lines.sort_by_key(|l| (l.0, l.1));
    out.write_all(HEADER.as_bytes())?;
    out.write_all(b"\n")?;
    for (_, _, line) in lines {
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub k_over_n: f64,
    pub algorithm: Algorithm,
    pub model: AmplitudeModel,
    pub omega: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_overlap: f64,
    pub master_seed: u64,
}

/// One success-rate curve: rows sharing everything but `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub n: usize,
    pub m: usize,
    pub algorithm: Algorithm,
    pub model: AmplitudeModel,
    pub omega: f64,
    pub master_seed: u64,
    /// `(k/n, success_rate)`, ascending in `k/n`.
    pub points: Vec<(f64, f64)>,
}

impl Curve {
    pub fn label(&self) -> String {
        match self.algorithm {
            Algorithm::Plain => format!("plain, {}, n={} m={}", self.model.label(), self.n, self.m),
            Algorithm::TwoStage => format!(
                "two-stage ω={}, {}, n={} m={}",
                fmt_sig6(self.omega),
                self.model.label(),
                self.n,
                self.m
            ),
        }
    }

    pub fn threshold(&self) -> Result<f64> {
        super::estimate_threshold_from_points(&self.points)
    }
}

fn field<T: std::str::FromStr>(record: &::csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    record
        .get(idx)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad or missing '{name}' in line {:?}", record.position().map(|p| p.line()))))
}

/// Parses a sweep CSV written by [`write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut reader = ::csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = reader.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    let expected: Vec<&str> = HEADER.split(',').collect();
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::Parse(format!("unexpected header {got:?}")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let rec = record.map_err(|e| Error::Parse(e.to_string()))?;
        let algorithm = Algorithm::parse(rec.get(4).unwrap_or("").trim())
            .map_err(|e| Error::Parse(e.to_string()))?;
        let model = AmplitudeModel::parse(rec.get(5).unwrap_or("").trim())
            .map_err(|e| Error::Parse(e.to_string()))?;
        rows.push(CsvRow {
            n: field(&rec, 0, "n")?,
            m: field(&rec, 1, "m")?,
            k: field(&rec, 2, "k")?,
            k_over_n: field(&rec, 3, "k_over_n")?,
            algorithm,
            model,
            omega: field(&rec, 6, "omega")?,
            trials: field(&rec, 7, "trials")?,
            successes: field(&rec, 8, "successes")?,
            success_rate: field(&rec, 9, "success_rate")?,
            mean_overlap: field(&rec, 10, "mean_overlap")?,
            master_seed: field(&rec, 11, "master_seed")?,
        });
    }
    Ok(rows)
}

impl CsvRow {
    fn same_curve(&self, c: &Curve) -> bool {
        self.n == c.n
            && self.m == c.m
            && self.algorithm == c.algorithm
            && self.model == c.model
            && self.omega == c.omega
            && self.master_seed == c.master_seed
    }
}

/// Groups rows into curves, in order of first appearance.
pub fn curves(rows: &[CsvRow]) -> Vec<Curve> {
    let mut out: Vec<Curve> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|c| r.same_curve(c)) {
            Some(c) => c.points.push((r.k_over_n, r.success_rate)),
            None => out.push(Curve {
                n: r.n,
                m: r.m,
                algorithm: r.algorithm,
                model: r.model,
                omega: r.omega,
                master_seed: r.master_seed,
                points: vec![(r.k_over_n, r.success_rate)],
            }),
        }
    }
    for c in &mut out {
        c.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}
