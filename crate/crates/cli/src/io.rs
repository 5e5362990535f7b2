use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use modent::{CMatrix, C64};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

pub const SCHEMA: u32 = 1;

/// On-disk matrix: parallel real and imaginary row arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub schema: u32,
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    /// Omitted means a real matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixFile {
    pub fn from_matrix(a: &CMatrix) -> Self {
        let n = a.nrows();
        let rows = |f: fn(&C64) -> f64| (0..n).map(|i| (0..n).map(|j| f(&a[(i, j)])).collect()).collect();
        MatrixFile { schema: SCHEMA, n, re: rows(|z| z.re), im: Some(rows(|z| z.im)) }
    }

    pub fn to_matrix(&self) -> Result<CMatrix, String> {
        if self.schema != SCHEMA {
            return Err(format!("unsupported schema {}", self.schema));
        }
        if self.n == 0 {
            return Err("n must be positive".into());
        }
        check_shape("re", &self.re, self.n)?;
        if let Some(im) = &self.im {
            check_shape("im", im, self.n)?;
        }
        Ok(CMatrix::from_fn(self.n, self.n, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |im| im[i][j]);
            C64::new(self.re[i][j], im)
        }))
    }
}

fn check_shape(name: &str, rows: &[Vec<f64>], n: usize) -> Result<(), String> {
    if rows.len() != n {
        return Err(format!("{name} has {} rows, expected {n}", rows.len()));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(format!("{name} row {i} has {} entries, expected {n}", row.len()));
        }
        if let Some(j) = row.iter().position(|x| !x.is_finite()) {
            return Err(format!("{name}[{i}][{j}] is not finite"));
        }
    }
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<CMatrix, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    parse_matrix(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Parse errors carry serde_json's line and column.
pub fn parse_matrix(text: &str) -> Result<CMatrix, String> {
    let file: MatrixFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    file.to_matrix()
}

pub fn write_matrix(path: &Path, a: &CMatrix) -> Result<(), CliError> {
    let text = serde_json::to_string(&MatrixFile::from_matrix(a)).expect("matrix serializes");
    fs::write(path, text + "\n").map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Infinite values become the string `"inf"`; JSON has no infinity.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else if x.is_nan() {
        Value::from("nan")
    } else if x > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub fn render(report: &Value, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        Format::Csv => {
            let mut out = String::from("key,value\n");
            flatten("", report, &mut out);
            out
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&join(k), v, out)),
        Value::Array(items) => items.iter().enumerate().for_each(|(i, v)| flatten(&join(&i.to_string()), v, out)),
        Value::String(s) => writeln!(out, "{prefix},{s}").unwrap(),
        other => writeln!(out, "{prefix},{other}").unwrap(),
    }
}
