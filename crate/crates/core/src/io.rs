//! Matrix files.
//!
//! Two formats:
//!
//! * CSV: one matrix row per line, comma separated, no header. Values are
//!   written with 17 significant digits so a write/read cycle is exact.
//! * Raw: a 16-byte header followed by the entries in column-major order as
//!   little-endian `f64`.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "SNMF"
//!      4     4  rows, u32 LE
//!      8     4  cols, u32 LE
//!     12     4  reserved, must be 0
//!     16  8*rows*cols  data
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub const RAW_MAGIC: &[u8; 4] = b"SNMF";
pub const RAW_HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    RawF64,
}

impl MatrixFormat {
    /// `.bin`, `.raw` and `.snmf` are raw; anything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ["bin", "raw", "snmf"].contains(&ext.to_ascii_lowercase().as_str()) => {
                MatrixFormat::RawF64
            }
            _ => MatrixFormat::Csv,
        }
    }

    /// Raw when the bytes start with the magic, CSV otherwise.
    pub fn sniff(bytes: &[u8]) -> Self {
        if bytes.starts_with(RAW_MAGIC) {
            MatrixFormat::RawF64
        } else {
            MatrixFormat::Csv
        }
    }
}

pub fn parse_csv(bytes: &[u8]) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes);
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("csv: {e}")))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(Error::Parse(format!(
                    "csv: row {} has {} fields, expected {c}",
                    line + 1,
                    record.len()
                )))
            }
            Some(_) => {}
        }
        for (k, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::Parse(format!(
                    "csv: row {}, field {}: {field:?} is not a number",
                    line + 1,
                    k + 1
                ))
            })?;
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Parse("csv: no data".into()))?;
    DenseMatrix::from_row_major(rows, cols, &values)
}

pub fn write_csv(m: &DenseMatrix) -> String {
    let mut out = String::with_capacity(m.rows() * m.cols() * 25);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{:.16e}", m.get(i, j)).expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

pub fn parse_raw(bytes: &[u8]) -> Result<DenseMatrix> {
    if bytes.len() < RAW_HEADER_LEN {
        return Err(Error::Parse(format!(
            "raw: {} bytes is shorter than the header",
            bytes.len()
        )));
    }
    if &bytes[..4] != RAW_MAGIC {
        return Err(Error::Parse("raw: bad magic".into()));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
    let (rows, cols, reserved) = (word(4) as usize, word(8) as usize, word(12));
    if reserved != 0 {
        return Err(Error::Parse("raw: reserved header field is not zero".into()));
    }
    let payload = &bytes[RAW_HEADER_LEN..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Parse(format!("raw: {rows}x{cols} is too large")))?;
    if payload.len() != expected {
        return Err(Error::Parse(format!(
            "raw: header says {rows}x{cols} ({expected} bytes), payload has {}",
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    DenseMatrix::new(rows, cols, data)
}

pub fn write_raw(m: &DenseMatrix) -> Result<Vec<u8>> {
    let dim =
        |n: usize| u32::try_from(n).map_err(|_| Error::InvalidShape(format!("{n} does not fit in u32")));
    let (rows, cols) = (dim(m.rows())?, dim(m.cols())?);
    let mut out = Vec::with_capacity(RAW_HEADER_LEN + 8 * m.data().len());
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn parse_matrix(bytes: &[u8], format: MatrixFormat) -> Result<DenseMatrix> {
    match format {
        MatrixFormat::Csv => parse_csv(bytes),
        MatrixFormat::RawF64 => parse_raw(bytes),
    }
}

/// Reads a matrix, detecting the format from the content.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_matrix(&bytes, MatrixFormat::sniff(&bytes))
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_matrix(path: &Path, m: &DenseMatrix, format: MatrixFormat) -> Result<()> {
    let bytes = match format {
        MatrixFormat::Csv => write_csv(m).into_bytes(),
        MatrixFormat::RawF64 => write_raw(m)?,
    };
    fs::write(path, bytes).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}
