use nalgebra::DVector;
use serde::Serialize;

use crate::diagram::SystemType;
use crate::linalg::{max_abs_r, RMatrix};

/// Dense real matrix of a transformation `St_R(input) → St_R(output)`.
///
/// In the real-amplitude backend the state spaces of composites are not tensor
/// products of the factors' spaces, so the matrix alone does not determine
/// parallel composition. There the action on the full real operator space is
/// kept alongside as the extension; in the other backends the two coincide.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    input: SystemType,
    output: SystemType,
    matrix: RMatrix,
    extension: Option<RMatrix>,
}

impl TransferMatrix {
    pub(crate) fn from_parts(
        input: SystemType,
        output: SystemType,
        matrix: RMatrix,
        extension: Option<RMatrix>,
    ) -> Self {
        Self {
            input,
            output,
            matrix,
            extension,
        }
    }

    pub fn input_type(&self) -> &SystemType {
        &self.input
    }

    pub fn output_type(&self) -> &SystemType {
        &self.output
    }

    /// Entries: rows index `St_R(output)`, columns `St_R(input)`.
    pub fn matrix(&self) -> &RMatrix {
        &self.matrix
    }

    /// The representation on which composition acts.
    pub fn full(&self) -> &RMatrix {
        self.extension.as_ref().unwrap_or(&self.matrix)
    }

    pub fn is_scalar(&self) -> bool {
        self.input.is_unit() && self.output.is_unit()
    }

    pub fn scalar_value(&self) -> Option<f64> {
        self.is_scalar().then(|| self.matrix[(0, 0)])
    }

    /// Largest entrywise difference over both representations.
    pub fn max_abs_diff(&self, other: &TransferMatrix) -> f64 {
        if self.matrix.shape() != other.matrix.shape() || self.full().shape() != other.full().shape() {
            return f64::INFINITY;
        }
        max_abs_r(&(&self.matrix - &other.matrix)).max(max_abs_r(&(self.full() - other.full())))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.matrix)
    }
}

impl Serialize for TransferMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(serializer)
    }
}

pub(crate) fn matrix_rows(m: &RMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Coordinates of a state in `St_R(system)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateVector {
    pub system: SystemType,
    #[serde(serialize_with = "serialize_dvec")]
    pub coords: DVector<f64>,
}

/// Coordinates of an effect in the dual space `Eff_R(system)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EffectVector {
    pub system: SystemType,
    #[serde(serialize_with = "serialize_dvec")]
    pub coords: DVector<f64>,
}

impl StateVector {
    pub fn new(system: SystemType, coords: DVector<f64>) -> Self {
        Self { system, coords }
    }
}

impl EffectVector {
    pub fn new(system: SystemType, coords: DVector<f64>) -> Self {
        Self { system, coords }
    }

    /// `F(a) ∘ F(α)`.
    pub fn pair(&self, state: &StateVector) -> f64 {
        self.coords.dot(&state.coords)
    }
}

pub(crate) fn serialize_dvec<S: serde::Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
    v.iter().copied().collect::<Vec<f64>>().serialize(s)
}
