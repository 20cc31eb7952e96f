//! Plain-text matrix files.
//!
//! Line 1 holds `rows cols`, followed by `rows * cols` whitespace-separated
//! entries in row-major order. An entry is `a`, `a+bi` or `a-bi` without
//! inner spaces. Lines starting with `#` are comments.

use std::fmt;

use numjcf_core::{Matrix, C64};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based line of the offending token, or the end of the file when it
    /// ended early.
    pub line: usize,
    /// 1-based column of the offending token.
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

struct Token<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

fn tokens(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim_start().starts_with('#') {
            continue;
        }
        let mut rest = line;
        let mut offset = 0;
        while let Some(start) = rest.find(|c: char| !c.is_whitespace()) {
            let tail = &rest[start..];
            let len = tail.find(char::is_whitespace).unwrap_or(tail.len());
            out.push(Token { text: &tail[..len], line: i + 1, column: offset + start + 1 });
            offset += start + len;
            rest = &tail[len..];
        }
    }
    out
}

/// Parses one complex entry; a bare `bi` is accepted as well.
pub fn parse_entry(s: &str) -> Option<C64> {
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().ok().map(|re| C64::new(re, 0.0));
    };
    // The split is the last sign that does not start the entry or an exponent.
    let bytes = body.as_bytes();
    let Some(split) = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'))
    else {
        return body.parse::<f64>().ok().map(|im| C64::new(0.0, im));
    };
    let re = body[..split].parse::<f64>().ok()?;
    let im = body[split..].strip_prefix('+').unwrap_or(&body[split..]).parse::<f64>().ok()?;
    Some(C64::new(re, im))
}

/// Formats a real number with 17 significant digits.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Formats an entry so that [`parse_entry`] returns the same bits.
pub fn format_entry(z: C64) -> String {
    if z.im.to_bits() == 0 {
        return format_real(z.re);
    }
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{sign}{}i", format_real(z.re), format_real(z.im.abs()))
}

pub fn parse_matrix(text: &str) -> Result<Matrix, ParseError> {
    let toks = tokens(text);
    let end_line = text.lines().count().max(1);
    let end_column = text.lines().last().map_or(0, str::len) + 1;
    let eof = |message: String| ParseError { line: end_line, column: end_column, message };
    let dim = |k: usize, what: &str| -> Result<usize, ParseError> {
        let t = toks.get(k).ok_or_else(|| eof(format!("missing {what} in header")))?;
        if t.line != toks[0].line {
            return Err(ParseError { line: toks[0].line, column: toks[0].column, message: "header must be `rows cols`".into() });
        }
        t.text.parse::<usize>().map_err(|_| ParseError {
            line: t.line,
            column: t.column,
            message: format!("invalid {what} `{}`", t.text),
        })
    };
    if toks.is_empty() {
        return Err(eof("empty matrix file".into()));
    }
    let rows = dim(0, "row count")?;
    let cols = dim(1, "column count")?;
    if let Some(t) = toks.get(2).filter(|t| t.line == toks[0].line) {
        return Err(ParseError { line: t.line, column: t.column, message: "header must be `rows cols`".into() });
    }
    let body = &toks[2..];
    let want = rows * cols;
    if body.len() < want {
        return Err(eof(format!("expected {want} entries, found {}", body.len())));
    }
    if let Some(t) = body.get(want) {
        return Err(ParseError { line: t.line, column: t.column, message: format!("extra entry `{}`", t.text) });
    }
    let mut data = Vec::with_capacity(want);
    for t in body {
        let z = parse_entry(t.text).ok_or_else(|| ParseError {
            line: t.line,
            column: t.column,
            message: format!("invalid entry `{}`", t.text),
        })?;
        data.push(z);
    }
    Ok(Matrix::from_fn(rows, cols, |i, j| data[i * cols + j]))
}

pub fn write_matrix(m: &Matrix) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| format_entry(m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}
