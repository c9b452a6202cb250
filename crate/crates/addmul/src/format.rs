//! Plain-text matrix files.
//!
//! ```text
//! dense <rows> <cols> <bits>       sparse <rows> <cols> <bits> <nnz>     float <rows> <cols> <m>
//! 1 -2 3                           0 1 -2                                1.5 -0.25 +:-3:12
//! 4 5 -6                           1 2 7                                 -:4:2049 0 1e-3
//! ```
//!
//! Dense rows hold signed decimal integers. Sparse files list one 0-based
//! `row col value` triple per line. Float elements are either decimals, which
//! are rounded to `m` mantissa bits (ties to even), or exact
//! `sign:exponent:mantissa` triples meaning `±mantissa * 2^exponent` with an
//! `m`-bit normalized mantissa. Floats are always written as triples, so a
//! written file reads back bit for bit. Blank lines and lines starting with
//! `#` are ignored.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use addmul_core::{DenseMatrix, FloatMatrix, SoftFloat, SparseTriples};
use num_bigint::{BigInt, BigUint};
use num_traits::Zero;

use crate::error::{Error, Result};

/// Largest decimal exponent accepted in a float element.
pub const MAX_DECIMAL_EXPONENT: u32 = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Matrix {
    Dense(DenseMatrix),
    Sparse(SparseTriples),
    Float(FloatMatrix),
}

impl Matrix {
    pub fn kind(&self) -> &'static str {
        match self {
            Matrix::Dense(_) => "dense",
            Matrix::Sparse(_) => "sparse",
            Matrix::Float(_) => "float",
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.rows(),
            Matrix::Sparse(m) => m.rows(),
            Matrix::Float(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.cols(),
            Matrix::Sparse(m) => m.cols(),
            Matrix::Float(m) => m.cols(),
        }
    }
}

/// Non-blank, non-comment lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn number<T: std::str::FromStr>(line: usize, token: &str, what: &str) -> Result<T> {
    token.parse().map_err(|_| Error::parse(line, format!("invalid {what} '{token}'")))
}

fn check_width(line: usize, v: i128, bits: u32) -> Result<()> {
    if v.unsigned_abs() >> bits != 0 {
        Err(Error::Value { line, source: addmul_core::Error::ValueOutOfRange { value: v, bits } })
    } else {
        Ok(())
    }
}

pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let expect = |n: usize| -> Result<()> {
        if fields.len() == n {
            Ok(())
        } else {
            Err(Error::parse(hline, format!("{} header takes {} fields, found {}", fields[0], n - 1, fields.len() - 1)))
        }
    };
    match fields[0] {
        "dense" => {
            expect(4)?;
            let rows = number(hline, fields[1], "row count")?;
            let cols = number(hline, fields[2], "column count")?;
            let bits = header_bits(hline, fields[3])?;
            parse_dense(lines, hline, rows, cols, bits).map(Matrix::Dense)
        }
        "sparse" => {
            expect(5)?;
            let rows = number(hline, fields[1], "row count")?;
            let cols = number(hline, fields[2], "column count")?;
            let bits = header_bits(hline, fields[3])?;
            let nnz = number(hline, fields[4], "entry count")?;
            parse_sparse(lines, hline, rows, cols, bits, nnz).map(Matrix::Sparse)
        }
        "float" => {
            expect(4)?;
            let rows = number(hline, fields[1], "row count")?;
            let cols = number(hline, fields[2], "column count")?;
            let m: u32 = number(hline, fields[3], "mantissa width")?;
            if m == 0 || m > addmul_core::MAX_BITS {
                return Err(Error::Value { line: hline, source: addmul_core::Error::InvalidMantissaBits(m) });
            }
            parse_float_matrix(lines, hline, rows, cols, m).map(Matrix::Float)
        }
        other => Err(Error::parse(hline, format!("unknown matrix kind '{other}'"))),
    }
}

fn header_bits(line: usize, token: &str) -> Result<u32> {
    let bits: u32 = number(line, token, "bit width")?;
    if bits == 0 || bits > 127 {
        return Err(Error::Value { line, source: addmul_core::Error::InvalidBits(bits) });
    }
    Ok(bits)
}

fn rows_of<'a, T>(
    lines: impl Iterator<Item = (usize, &'a str)>,
    hline: usize,
    rows: usize,
    cols: usize,
    mut element: impl FnMut(usize, &str) -> Result<T>,
) -> Result<Vec<T>> {
    let mut data = Vec::with_capacity(rows.saturating_mul(cols).min(1 << 24));
    let mut seen = 0;
    let mut last = hline;
    for (line, text) in lines {
        if seen == rows {
            return Err(Error::parse(line, format!("expected {rows} rows, found more")));
        }
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() != cols {
            return Err(Error::parse(line, format!("expected {cols} values, found {}", tokens.len())));
        }
        for t in tokens {
            data.push(element(line, t)?);
        }
        seen += 1;
        last = line;
    }
    if seen != rows {
        return Err(Error::parse(last, format!("expected {rows} rows, found {seen}")));
    }
    Ok(data)
}

fn parse_dense<'a>(
    lines: impl Iterator<Item = (usize, &'a str)>,
    hline: usize,
    rows: usize,
    cols: usize,
    bits: u32,
) -> Result<DenseMatrix> {
    let data = rows_of(lines, hline, rows, cols, |line, t| {
        let v: i128 = number(line, t, "integer")?;
        check_width(line, v, bits)?;
        Ok(v)
    })?;
    Ok(DenseMatrix::new(rows, cols, bits, data)?)
}

fn parse_sparse<'a>(
    lines: impl Iterator<Item = (usize, &'a str)>,
    hline: usize,
    rows: usize,
    cols: usize,
    bits: u32,
    nnz: usize,
) -> Result<SparseTriples> {
    let mut entries = Vec::with_capacity(nnz.min(1 << 24));
    let mut seen = HashSet::new();
    let mut last = hline;
    for (line, text) in lines {
        if entries.len() == nnz {
            return Err(Error::parse(line, format!("expected {nnz} entries, found more")));
        }
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(Error::parse(line, format!("expected 'row col value', found {} fields", tokens.len())));
        }
        let i: usize = number(line, tokens[0], "row index")?;
        let j: usize = number(line, tokens[1], "column index")?;
        let v: i128 = number(line, tokens[2], "integer")?;
        if i >= rows || j >= cols {
            return Err(Error::parse(line, format!("entry ({i}, {j}) is outside a {rows}x{cols} matrix")));
        }
        if v == 0 {
            return Err(Error::parse(line, format!("explicit zero stored at ({i}, {j})")));
        }
        if !seen.insert((i, j)) {
            return Err(Error::parse(line, format!("duplicate entry at ({i}, {j})")));
        }
        check_width(line, v, bits)?;
        entries.push((i, j, v));
        last = line;
    }
    if entries.len() != nnz {
        return Err(Error::parse(last, format!("expected {nnz} entries, found {}", entries.len())));
    }
    Ok(SparseTriples::new(rows, cols, bits, entries)?)
}

fn parse_float_matrix<'a>(
    lines: impl Iterator<Item = (usize, &'a str)>,
    hline: usize,
    rows: usize,
    cols: usize,
    m: u32,
) -> Result<FloatMatrix> {
    let data = rows_of(lines, hline, rows, cols, |line, t| parse_float(t, m).map_err(|e| e.at_line(line)))?;
    Ok(FloatMatrix::new(rows, cols, m, data)?)
}

/// Why a float element was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FloatError {
    Syntax(String),
    Range(addmul_core::Error),
}

impl FloatError {
    fn at_line(self, line: usize) -> Error {
        match self {
            FloatError::Syntax(m) => Error::parse(line, m),
            FloatError::Range(source) => Error::Value { line, source },
        }
    }
}

/// Parse a decimal or `sign:exponent:mantissa` element.
pub fn parse_float(token: &str, m: u32) -> Result<SoftFloat, FloatError> {
    let bad = || FloatError::Syntax(format!("invalid float '{token}'"));
    if token.contains(':') {
        let parts: Vec<&str> = token.split(':').collect();
        let [s, e, mant] = parts[..] else { return Err(bad()) };
        let negative = match s {
            "+" | "0" => false,
            "-" | "1" => true,
            _ => return Err(bad()),
        };
        let exponent: i64 = e.parse().map_err(|_| bad())?;
        let mantissa: u64 = mant.parse().map_err(|_| bad())?;
        return SoftFloat::new(negative, exponent, mantissa, m).map_err(FloatError::Range);
    }
    let (negative, rest) = match token.as_bytes().first() {
        Some(b'-') => (true, &token[1..]),
        Some(b'+') => (false, &token[1..]),
        _ => (false, token),
    };
    let (mantissa, exp10) = match rest.find(['e', 'E']) {
        Some(p) => (&rest[..p], rest[p + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (rest, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() || !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigUint = format!("{int}{frac}").trim_start_matches('0').parse().unwrap_or_default();
    if digits.is_zero() {
        return Ok(SoftFloat::ZERO);
    }
    let exp10 = exp10 - frac.len() as i64;
    if exp10.unsigned_abs() > u64::from(MAX_DECIMAL_EXPONENT) {
        return Err(FloatError::Syntax(format!("decimal exponent of '{token}' is out of range")));
    }
    let sign = if negative { num_bigint::Sign::Minus } else { num_bigint::Sign::Plus };
    let result = if exp10 >= 0 {
        let v = digits * BigUint::from(10u32).pow(exp10 as u32);
        SoftFloat::round_bigint(&BigInt::from_biguint(sign, v), 0, m)
    } else {
        // value = digits / 5^q * 2^-q; keep m + 2 quotient bits, fold any
        // remainder into a sticky low bit
        let q = exp10.unsigned_abs() as u32;
        let five = BigUint::from(5u32).pow(q);
        let s = (five.bits() + u64::from(m) + 2).saturating_sub(digits.bits());
        let scaled = digits << s;
        let (mut quot, rem) = (&scaled / &five, &scaled % &five);
        let mut exponent = -i64::from(q) - s as i64;
        if !rem.is_zero() {
            quot = (quot << 1u32) | BigUint::from(1u32);
            exponent -= 1;
        }
        SoftFloat::round_bigint(&BigInt::from_biguint(sign, quot), exponent, m)
    };
    result.map_err(FloatError::Range)
}

/// `sign:exponent:mantissa`.
pub fn format_float(x: &SoftFloat) -> String {
    format!("{}:{}:{}", if x.negative { '-' } else { '+' }, x.exponent, x.mantissa)
}

pub fn format_matrix(matrix: &Matrix) -> String {
    let mut out = String::new();
    match matrix {
        Matrix::Dense(d) => {
            writeln!(out, "dense {} {} {}", d.rows(), d.cols(), d.bits()).unwrap();
            for i in 0..d.rows() {
                write_row(&mut out, d.row(i).iter().map(|v| v.to_string()));
            }
        }
        Matrix::Sparse(s) => {
            writeln!(out, "sparse {} {} {} {}", s.rows(), s.cols(), s.bits(), s.nnz()).unwrap();
            for (i, j, v) in s.entries() {
                writeln!(out, "{i} {j} {v}").unwrap();
            }
        }
        Matrix::Float(f) => {
            writeln!(out, "float {} {} {}", f.rows(), f.cols(), f.mantissa_bits()).unwrap();
            for i in 0..f.rows() {
                write_row(&mut out, (0..f.cols()).map(|j| format_float(&f.get(i, j))));
            }
        }
    }
    out
}

fn write_row(out: &mut String, items: impl Iterator<Item = String>) {
    let row: Vec<String> = items.collect();
    out.push_str(&row.join(" "));
    out.push('\n');
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
    parse_matrix(&text).map_err(|e| e.in_file(path))
}

pub fn write_matrix(path: impl AsRef<Path>, matrix: &Matrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_matrix(matrix)).map_err(|e| Error::from(e).in_file(path))
}
