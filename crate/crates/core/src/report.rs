//! Report emission: CSV tables, JSON summaries and the c↔κ↔α conversion
//! table. Floats are printed with a fixed number of significant digits so
//! reruns are byte-identical; every file carries the manifest hash.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractal::{alpha_of_kappa, c_of_kappa, free_point_dimension, sle_dimension};

/// Significant digits for statistics.
pub const STAT_DIGITS: usize = 6;
/// Significant digits for exact conversions (enough to round-trip an f64).
pub const EXACT_DIGITS: usize = 17;

pub const CONVERSION_KAPPAS: [f64; 4] = [2.7, 3.0, 3.5, 4.0];

/// `x` with `digits` significant digits; plain decimal for moderate
/// exponents, scientific otherwise, trailing zeros trimmed.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = mantissa.strip_prefix('-').map_or(("", mantissa), |m| ("-", m));
    let ds: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    if !(-5..16).contains(&exp) {
        return format!("{sign}{}e{exp}", trim_fraction(mantissa));
    }
    let body = if exp < 0 {
        format!("0.{}{ds}", "0".repeat((-exp - 1) as usize))
    } else {
        let int_len = exp as usize + 1;
        if ds.len() <= int_len {
            format!("{ds}{}", "0".repeat(int_len - ds.len()))
        } else {
            format!("{}.{}", &ds[..int_len], &ds[int_len..])
        }
    };
    format!("{sign}{}", trim_fraction(&body))
}

fn trim_fraction(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

pub fn fmt_stat(x: f64) -> String {
    fmt_sig(x, STAT_DIGITS)
}

pub fn fmt_exact(x: f64) -> String {
    fmt_sig(x, EXACT_DIGITS)
}

/// `x` rounded to statistic precision.
pub fn round_stat(x: f64) -> f64 {
    fmt_stat(x).parse().unwrap_or(x)
}

/// A CSV table of pre-formatted cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self { header: header.iter().map(|s| s.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// CSV text: a `# manifest sha256 <hash>` line, the header, the rows.
    pub fn to_csv(&self, manifest_hash: &str) -> String {
        let mut out = format!("# manifest sha256 {manifest_hash}\n").into_bytes();
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
            w.write_record(&self.header).expect("in-memory write");
            for r in &self.rows {
                w.write_record(r).expect("in-memory write");
            }
            w.flush().expect("in-memory flush");
        }
        String::from_utf8(out).expect("cells are UTF-8")
    }

    pub fn write(&self, path: &Path, manifest_hash: &str) -> Result<()> {
        fs::write(path, self.to_csv(manifest_hash)).map_err(|e| Error::io(path, e))
    }

    /// Parses text written by [`Table::to_csv`], returning the hash too.
    pub fn parse(text: &str) -> Result<(String, Table)> {
        let first = text.lines().next().unwrap_or_default();
        let hash = first
            .strip_prefix("# manifest sha256 ")
            .ok_or_else(|| Error::Parse { line: 1, reason: "missing manifest hash line".into() })?
            .to_string();
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let parse_err = |e: csv::Error| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            reason: e.to_string(),
        };
        let header: Vec<String> = r.headers().map_err(parse_err)?.iter().map(str::to_string).collect();
        let mut table = Table { header, rows: Vec::new() };
        for rec in r.records() {
            table.rows.push(rec.map_err(parse_err)?.iter().map(str::to_string).collect());
        }
        Ok((hash, table))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConversionRow {
    pub kappa: f64,
    pub c: f64,
    pub alpha: f64,
    pub sle_dimension: f64,
    pub free_point_dimension: f64,
}

pub fn conversion_table(kappas: &[f64]) -> Result<Vec<ConversionRow>> {
    kappas
        .iter()
        .map(|&kappa| {
            let c = c_of_kappa(kappa)?;
            Ok(ConversionRow {
                kappa,
                c,
                alpha: alpha_of_kappa(kappa)?,
                sle_dimension: sle_dimension(kappa),
                free_point_dimension: free_point_dimension(c),
            })
        })
        .collect()
}

pub fn conversion_csv(rows: &[ConversionRow]) -> Table {
    let mut t = Table::new(&["kappa", "c", "alpha", "sle_dimension", "free_point_dimension"]);
    for r in rows {
        t.push([r.kappa, r.c, r.alpha, r.sle_dimension, r.free_point_dimension].map(fmt_exact).to_vec());
    }
    t
}

/// Run summary written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub manifest_sha256: String,
    pub experiment: String,
    pub crate_version: String,
    pub seed: u64,
    pub samples: usize,
    /// Finite statistics, rounded to six significant digits.
    pub metrics: BTreeMap<String, f64>,
    /// Flags, labels and non-finite statistics.
    pub notes: BTreeMap<String, String>,
    pub conversions: Vec<ConversionRow>,
    /// Artifact file names, sorted.
    pub artifacts: Vec<String>,
}

impl Summary {
    pub fn new(manifest_sha256: &str, experiment: &str, seed: u64, samples: usize) -> Self {
        Self {
            manifest_sha256: manifest_sha256.to_string(),
            experiment: experiment.to_string(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            samples,
            metrics: BTreeMap::new(),
            notes: BTreeMap::new(),
            conversions: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn metric(&mut self, name: &str, value: f64) -> &mut Self {
        if value.is_finite() {
            self.metrics.insert(name.to_string(), round_stat(value));
        } else {
            self.notes.insert(name.to_string(), fmt_stat(value));
        }
        self
    }

    pub fn note(&mut self, name: &str, value: impl ToString) -> &mut Self {
        self.notes.insert(name.to_string(), value.to_string());
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), reason: e.to_string() })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_json().as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
