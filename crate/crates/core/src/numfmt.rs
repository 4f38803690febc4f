//! Fixed-precision number formatting and two-column CSV reading.
//!
//! All CSV output uses six significant digits so that golden files are
//! stable across platforms.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CsvError {
    #[error("expected header `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("line {line}: {msg}")]
    Row { line: usize, msg: String },
    #[error("no data rows")]
    Empty,
}

/// Formats `x` with six significant digits, `%g` style: fixed notation for
/// decimal exponents in [-4, 6), scientific otherwise, trailing zeros trimmed.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    // Round once in scientific form so the exponent reflects the rounded value.
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".to_string()
    } else {
        t.to_string()
    }
}

/// Parses a two-column numeric CSV with the exact header `expected_header`.
///
/// Blank lines are skipped. Values use `.` as the decimal separator.
pub fn parse_xy_csv(text: &str, expected_header: &str) -> Result<Vec<(f64, f64)>, CsvError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l.trim(),
            None => return Err(CsvError::Empty),
        }
    };
    if header != expected_header {
        return Err(CsvError::Header {
            expected: expected_header.to_string(),
            found: header.to_string(),
        });
    }
    let mut rows = Vec::new();
    for (idx, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let (a, b) = match (cols.next(), cols.next(), cols.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(CsvError::Row {
                    line: idx + 1,
                    msg: "expected exactly two columns".into(),
                })
            }
        };
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| CsvError::Row {
                line: idx + 1,
                msg: format!("`{}`: {e}", s.trim()),
            })
        };
        rows.push((parse(a)?, parse(b)?));
    }
    if rows.is_empty() {
        return Err(CsvError::Empty);
    }
    Ok(rows)
}

/// Writes rows as a two-column CSV with [`sig6`] formatting.
pub fn write_xy_csv(header: &str, rows: &[(f64, f64)]) -> String {
    let mut out = String::with_capacity(16 * (rows.len() + 1));
    out.push_str(header);
    out.push('\n');
    for (a, b) in rows {
        out.push_str(&sig6(*a));
        out.push(',');
        out.push_str(&sig6(*b));
        out.push('\n');
    }
    out
}
