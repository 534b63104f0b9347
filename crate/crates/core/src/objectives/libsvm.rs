//! LIBSVM sparse text format: `<label> <index>:<value> ...`, 1-based indices.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use crate::linalg::CsrMatrix;
use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum LibsvmError {
    #[error("line {line}: malformed token `{token}`")]
    MalformedToken { line: usize, token: String },
    #[error("line {line}: `{token}` is not a number")]
    InvalidNumber { line: usize, token: String },
    #[error("line {line}: feature index {index} is not strictly increasing")]
    NonIncreasingIndex { line: usize, index: usize },
    #[error("line {line}: feature indices are 1-based, found 0")]
    ZeroIndex { line: usize },
    #[error("expected binary labels, found {0:?}")]
    TooManyLabels(Vec<f64>),
    #[error("no data rows")]
    Empty,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parsed binary-classification data with labels mapped to `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LibsvmData<T> {
    pub features: CsrMatrix<T>,
    pub labels: Vec<T>,
}

fn parse_number(line: usize, token: &str) -> Result<f64, LibsvmError> {
    token.parse::<f64>().map_err(|_| LibsvmError::InvalidNumber { line, token: token.to_string() })
}

/// Maps the observed label values onto `{0, 1}`: `{−1, +1}` and `{0, 1}`
/// keep their order, any other pair sends the larger value to 1.
fn label_map(distinct: &[f64]) -> Result<impl Fn(f64) -> bool + '_, LibsvmError> {
    match distinct.len() {
        0 => Err(LibsvmError::Empty),
        1 | 2 => {
            let hi = distinct.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let single = distinct.len() == 1;
            Ok(move |v: f64| if single { v > 0.0 } else { v == hi })
        }
        _ => Err(LibsvmError::TooManyLabels(distinct.to_vec())),
    }
}

pub fn parse_libsvm<T: Scalar, R: BufRead>(source: R) -> Result<LibsvmData<T>, LibsvmError> {
    let mut rows: Vec<Vec<(usize, T)>> = Vec::new();
    let mut raw_labels = Vec::new();
    let mut n = 0usize;
    for (lineno, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let mut tokens = line.split_whitespace();
        let Some(label) = tokens.next() else { continue };
        raw_labels.push(parse_number(lineno, label)?);
        let mut entries = Vec::new();
        let mut last = 0usize;
        for token in tokens {
            let (idx, val) = token
                .split_once(':')
                .ok_or_else(|| LibsvmError::MalformedToken { line: lineno, token: token.to_string() })?;
            let index: usize =
                idx.parse().map_err(|_| LibsvmError::MalformedToken { line: lineno, token: token.to_string() })?;
            if index == 0 {
                return Err(LibsvmError::ZeroIndex { line: lineno });
            }
            if index <= last {
                return Err(LibsvmError::NonIncreasingIndex { line: lineno, index });
            }
            last = index;
            let value = parse_number(lineno, val)?;
            entries.push((index - 1, T::of(value)));
        }
        n = n.max(last);
        rows.push(entries);
    }
    let mut distinct: Vec<f64> = Vec::new();
    for &l in &raw_labels {
        if !distinct.contains(&l) {
            distinct.push(l);
        }
    }
    let to_positive = label_map(&distinct)?;
    let labels = raw_labels.iter().map(|&l| if to_positive(l) { T::one() } else { T::zero() }).collect();
    let mut features = CsrMatrix::new(n);
    for r in &rows {
        features.push_row(r);
    }
    Ok(LibsvmData { features, labels })
}

pub fn read_libsvm_file<T: Scalar>(path: impl AsRef<Path>) -> Result<LibsvmData<T>, LibsvmError> {
    parse_libsvm(BufReader::new(File::open(path)?))
}

/// Writes `data` back in LIBSVM format with `{0, 1}` labels.
pub fn write_libsvm<T: Scalar, W: Write>(data: &LibsvmData<T>, mut out: W) -> io::Result<()> {
    for (i, label) in data.labels.iter().enumerate() {
        write!(out, "{}", if *label == T::one() { 1 } else { 0 })?;
        for (j, v) in data.features.row(i) {
            write!(out, " {}:{}", j + 1, v)?;
        }
        writeln!(out)?;
    }
    Ok(())
}
