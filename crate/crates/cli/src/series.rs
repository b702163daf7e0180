//! Per-trajectory CSV files: `t,re,im,trajectory_id`.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::CliError;

pub const HEADER: &str = "t,re,im,trajectory_id";

/// Floats are written in shortest round-trip form, so reading a file back
/// reproduces the samples bit for bit.
pub fn to_csv(id: &str, times: &[f64], values: &[Complex64]) -> String {
    let mut out = String::with_capacity(48 * times.len() + 32);
    out.push_str(HEADER);
    out.push('\n');
    for (t, v) in times.iter().zip(values) {
        let _ = writeln!(out, "{t},{},{},{id}", v.re, v.im);
    }
    out
}

pub fn write(path: &Path, id: &str, times: &[f64], values: &[Complex64]) -> Result<(), CliError> {
    std::fs::write(path, to_csv(id, times, values)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn read(path: &Path) -> Result<Vec<(f64, Complex64)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let bad = |line: usize, what: &str| CliError::Io(format!("{}:{line}: {what}", path.display()));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        _ => return Err(bad(1, "missing header")),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let mut cols = line.split(',');
        let mut num = || -> Result<f64, CliError> {
            cols.next().and_then(|c| c.parse().ok()).ok_or_else(|| bad(i + 1, "malformed row"))
        };
        let (t, re, im) = (num()?, num()?, num()?);
        out.push((t, Complex64::new(re, im)));
    }
    Ok(out)
}
