//! Number formatting and writers shared by the commands.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to 12 significant digits. Negative zero becomes zero.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let s = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let y: f64 = s.parse().expect("formatted float parses");
    if y == 0.0 {
        0.0
    } else {
        y
    }
}

/// Shortest text that reads back as the 12-digit rounding of `x`.
pub fn fmt_num(x: f64) -> String {
    let y = round_sig(x);
    if y.is_nan() {
        return "NaN".into();
    }
    if y.is_infinite() {
        return if y > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // Debug gives the shortest round-trip form, switching to exponent
    // notation for very large or small magnitudes.
    let s = format!("{y:?}");
    s.strip_suffix(".0").map(str::to_owned).unwrap_or(s)
}

pub fn fmt_bool(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Copies a JSON tree with every float rounded to 12 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap_or(f64::NAN));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect())
        }
        other => other,
    }
}

pub fn open(out: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
            CliError::Config(format!("cannot create {}: {e}", path.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Pretty JSON report with floats rounded to 12 significant digits.
pub fn write_json(out: &mut dyn Write, value: &impl Serialize) -> Result<(), CliError> {
    let tree = serde_json::to_value(value).map_err(|e| CliError::Internal(e.to_string()))?;
    serde_json::to_writer_pretty(&mut *out, &round_json(tree))
        .map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out).map_err(|e| CliError::Io(e.to_string()))?;
    out.flush().map_err(|e| CliError::Io(e.to_string()))
}

/// Compact JSON at full precision, for data that is read back.
pub fn write_json_exact(out: &mut dyn Write, value: &impl Serialize) -> Result<(), CliError> {
    serde_json::to_writer(&mut *out, value).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out).map_err(|e| CliError::Io(e.to_string()))?;
    out.flush().map_err(|e| CliError::Io(e.to_string()))
}

/// Comma-separated output with a header row and LF line endings.
pub struct CsvOut<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> CsvOut<W> {
    pub fn new(w: W, header: &[&str]) -> Result<Self, CliError> {
        let mut inner = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        inner
            .write_record(header)
            .map_err(|e| CliError::Io(e.to_string()))?;
        Ok(Self { inner })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        self.inner
            .write_record(fields)
            .map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.inner.flush().map_err(|e| CliError::Io(e.to_string()))
    }
}
