use std::fs;
use std::path::Path;

use sepnmf::io::{parse_matrix, MatrixFormat};
use sepnmf::{DenseMatrix, SelectorSpec};

use crate::failure::{Failure, Outcome};

/// Reads a matrix file, returning the matrix and the raw bytes for checksums.
pub fn load_matrix(path: &Path) -> Outcome<(DenseMatrix, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| Failure::io("reading input", path, e))?;
    let m = parse_matrix(&bytes, MatrixFormat::sniff(&bytes))
        .map_err(|e| Failure::usage("parsing input", format!("{}: {e}", path.display())))?;
    Ok((m, bytes))
}

pub fn parse_selector(s: &str) -> Result<SelectorSpec, String> {
    s.parse::<SelectorSpec>().map_err(|e| e.to_string())
}

pub fn join_indices(indices: &[usize]) -> String {
    indices
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}
