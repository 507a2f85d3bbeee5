use serde::Serialize;

use crate::linalg::{CMatrix, CVector, RMatrix};

/// Backend-specific literal representation of a box.
#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    /// Unnormalized Choi matrix `Σ_ij |i⟩⟨j| ⊗ M(|i⟩⟨j|)`, input factor first.
    Choi(CMatrix),
    Kraus(Vec<CMatrix>),
    /// Column-substochastic matrix, rows = output.
    Stochastic(RMatrix),
    /// Density operator of a state, or effect operator of an effect.
    Density(CMatrix),
    /// Ket `ψ`, denoting `|ψ⟩⟨ψ|` as a state or as an effect.
    Ket(CVector),
    /// Classical probability vector of a state, or response vector of an effect.
    Probabilities(Vec<f64>),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Choi(_) => "choi",
            Payload::Kraus(_) => "kraus",
            Payload::Stochastic(_) => "stoch",
            Payload::Density(_) => "dens",
            Payload::Ket(_) => "vec",
            Payload::Probabilities(_) => "vec",
        }
    }
}

/// A violated membership condition with its numerical margin.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub condition: String,
    pub value: f64,
    pub bound: f64,
    /// Amount by which `value` is past `bound`.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict")]
pub enum PhysicalityCertificate {
    Physical,
    NotPhysical(Violation),
}

impl PhysicalityCertificate {
    pub fn is_physical(&self) -> bool {
        matches!(self, PhysicalityCertificate::Physical)
    }

    pub fn violation(&self) -> Option<&Violation> {
        match self {
            PhysicalityCertificate::Physical => None,
            PhysicalityCertificate::NotPhysical(v) => Some(v),
        }
    }

    pub(crate) fn lower(condition: &str, value: f64, bound: f64) -> Self {
        PhysicalityCertificate::NotPhysical(Violation {
            condition: condition.to_string(),
            value,
            bound,
            margin: bound - value,
        })
    }

    pub(crate) fn upper(condition: &str, value: f64, bound: f64) -> Self {
        PhysicalityCertificate::NotPhysical(Violation {
            condition: condition.to_string(),
            value,
            bound,
            margin: value - bound,
        })
    }
}
