//! Plain-text serialization shared by the solver and the CLI.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::ArrayView2;

use crate::error::Result;

/// Fixed-width scientific notation with 17 significant digits, which
/// round-trips every finite `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Rows of `values` as comma-separated lines after a `# nx=.. nt=.. N=..`
/// comment line.
pub fn field_csv(values: ArrayView2<f64>, nx: usize, nt: usize, n_gamma: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# nx={nx} nt={nt} N={n_gamma}");
    for row in values.rows() {
        let line: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

/// Parses a file written by [`field_csv`], skipping comment lines.
pub fn parse_field_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                s.trim().parse::<f64>().map_err(|e| {
                    crate::Error::Config(format!("line {}: bad number {s:?}: {e}", lineno + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}
