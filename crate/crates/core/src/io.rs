//! Plain-text output helpers shared by the exporters.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// Formats with 17 significant digits, independent of locale. Integral
/// values below 2^53 are written as plain integers.
pub fn fmt_f64(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 9.007_199_254_740_992e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.16e}")
    }
}

/// Builds a CSV document: a header line then one line per row.
pub fn csv_string(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                s.push(',');
            }
            first = false;
            let _ = write!(s, "{}", fmt_f64(*v));
        }
        s.push('\n');
    }
    s
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
    std::fs::write(path, csv_string(header, rows))
}

/// Parses a CSV document written by [`csv_string`], returning the header
/// and numeric rows.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or("empty csv")?;
    let header: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (lineno, line) in lines {
        let row = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        if row.len() != header.len() {
            return Err(format!(
                "line {}: expected {} fields, found {}",
                lineno + 1,
                header.len(),
                row.len()
            ));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
