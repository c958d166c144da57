//! Matrix dump formats for cross-implementation comparison.
//!
//! Binary layout, all little-endian:
//!
//! ```text
//! magic   b"XMAT"
//! rows    u64
//! cols    u64
//! kind    u64     1 = real, 2 = complex
//! values  f64...  row-major; complex entries as (re, im) pairs
//! ```
//!
//! Text layout: a header line `rows cols real|complex`, then one line per
//! matrix row with whitespace-separated values (complex entries as `re im`),
//! printed with round-trip precision.

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Matrix, RMatrix, C64};

const MAGIC: &[u8; 4] = b"XMAT";

/// Real or complex matrix read back from a dump.
#[derive(Debug, Clone, PartialEq)]
pub enum DumpedMatrix {
    Real(RMatrix),
    Complex(CMatrix),
}

trait Element: Copy + Default {
    const KIND: u64;
    const NAME: &'static str;
    fn push_parts(&self, out: &mut Vec<f64>);
}

impl Element for f64 {
    const KIND: u64 = 1;
    const NAME: &'static str = "real";
    fn push_parts(&self, out: &mut Vec<f64>) {
        out.push(*self);
    }
}

impl Element for C64 {
    const KIND: u64 = 2;
    const NAME: &'static str = "complex";
    fn push_parts(&self, out: &mut Vec<f64>) {
        out.push(self.re);
        out.push(self.im);
    }
}

fn parts<T: Element>(m: &Matrix<T>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.as_slice().len() * 2);
    for v in m.as_slice() {
        v.push_parts(&mut out);
    }
    out
}

fn write_binary_impl<T: Element>(m: &Matrix<T>, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    for v in [m.rows() as u64, m.cols() as u64, T::KIND] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in parts(m) {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn to_text_impl<T: Element>(m: &Matrix<T>) -> String {
    let mut s = format!("{} {} {}\n", m.rows(), m.cols(), T::NAME);
    let per_row = m.cols() * T::KIND as usize;
    let flat = parts(m);
    for row in flat.chunks(per_row.max(1)).take(m.rows()) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

pub fn write_binary_real(m: &RMatrix, w: &mut impl Write) -> std::io::Result<()> {
    write_binary_impl(m, w)
}

pub fn write_binary_complex(m: &CMatrix, w: &mut impl Write) -> std::io::Result<()> {
    write_binary_impl(m, w)
}

pub fn to_text_real(m: &RMatrix) -> String {
    to_text_impl(m)
}

pub fn to_text_complex(m: &CMatrix) -> String {
    to_text_impl(m)
}

fn assemble(rows: usize, cols: usize, kind: u64, vals: Vec<f64>) -> Result<DumpedMatrix> {
    match kind {
        1 => Ok(DumpedMatrix::Real(Matrix::from_row_major(rows, cols, vals)?)),
        2 => {
            if vals.len() % 2 != 0 {
                return Err(Error::Parse("odd number of complex parts".into()));
            }
            let data = vals.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
            Ok(DumpedMatrix::Complex(Matrix::from_row_major(rows, cols, data)?))
        }
        other => Err(Error::Parse(format!("unknown element kind {other}"))),
    }
}

pub fn read_binary(r: &mut impl Read) -> Result<DumpedMatrix> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf).map_err(|e| Error::Parse(e.to_string()))?;
    if buf.len() < 28 || &buf[..4] != MAGIC {
        return Err(Error::Parse("missing XMAT header".into()));
    }
    let word = |i: usize| u64::from_le_bytes(buf[4 + 8 * i..12 + 8 * i].try_into().unwrap());
    let (rows, cols, kind) = (word(0) as usize, word(1) as usize, word(2));
    let body = &buf[28..];
    if body.len() % 8 != 0 {
        return Err(Error::Parse("truncated value block".into()));
    }
    let vals = body.chunks(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    assemble(rows, cols, kind, vals)
}

pub fn from_text(s: &str) -> Result<DumpedMatrix> {
    let mut lines = s.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix text".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [rows, cols, kind] = fields.as_slice() else {
        return Err(Error::Parse(format!("bad header {header:?}")));
    };
    let num = |t: &str| t.parse::<usize>().map_err(|e| Error::Parse(format!("{t:?}: {e}")));
    let (rows, cols) = (num(rows)?, num(cols)?);
    let kind = match *kind {
        "real" => 1,
        "complex" => 2,
        other => return Err(Error::Parse(format!("unknown element kind {other:?}"))),
    };
    let vals = lines
        .flat_map(str::split_whitespace)
        .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    assemble(rows, cols, kind, vals)
}
