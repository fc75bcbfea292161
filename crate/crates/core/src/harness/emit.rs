//! CSV and JSON output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{GctError, Result};

/// `%.9g`-style rendering: 9 significant digits, trailing zeros dropped.
/// NaN renders as an empty field.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return String::new();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&e) {
        trim_zeros(format!("{:.*}", (8 - e) as usize, x))
    } else {
        format!("{}e{e}", trim_zeros(mant.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub(crate) fn opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

pub(crate) fn opt_flag(x: Option<bool>) -> String {
    match x {
        Some(true) => "1".into(),
        Some(false) => "0".into(),
        None => String::new(),
    }
}

/// A row type with a fixed column order.
pub trait CsvRecord {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

/// Writes the header and `rows` as LF-terminated CSV.
pub fn write_csv<R: CsvRecord, W: Write>(rows: &[R], out: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(R::HEADER)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()
}

fn io_err(path: &Path, source: std::io::Error) -> GctError {
    GctError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn emit_csv<R: CsvRecord>(rows: &[R], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    write_csv(rows, BufWriter::new(file)).map_err(|e| io_err(path, e))
}

pub fn emit_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| GctError::Numeric(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}
