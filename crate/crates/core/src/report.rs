//! JSON helpers: matrices as nested row-major arrays, complex entries as `[re, im]`.

use serde::Serializer;
use serde::Serialize;

use crate::linalg::{CMatrix, RMatrix};

pub fn real_rows(m: &RMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn complex_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn ser_complex_matrix<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
    complex_rows(m).serialize(s)
}

pub fn ser_complex_matrices<S: Serializer>(ms: &[CMatrix], s: S) -> Result<S::Ok, S::Error> {
    ms.iter().map(complex_rows).collect::<Vec<_>>().serialize(s)
}

pub fn ser_real_matrix<S: Serializer>(m: &RMatrix, s: S) -> Result<S::Ok, S::Error> {
    real_rows(m).serialize(s)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
