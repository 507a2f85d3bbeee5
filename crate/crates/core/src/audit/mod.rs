//! Constructive checks of the causal and purification axioms and of the
//! dilation results that follow from them.
//!
//! Each check works on transfer matrices and state coordinates of a backend.
//! For the operator backends the constructions (Schmidt decompositions, Kraus
//! operators, isometries) are carried out on Hilbert-space operators and then
//! compiled back, so every result can be replayed through the evaluator.

mod causality;
mod choi;
mod niwd;
mod purification;
mod purity;
mod readout;
mod steering;
mod stinespring;

use serde::Serialize;
use thiserror::Error;

pub use causality::{check_causality, is_deterministic, marginal, marginal_transfer, CausalityReport, ObservationTest};
pub use choi::{choi_correspondence, ChoiCorrespondence, InjectivityCertificate};
pub use niwd::{niwd_check, NiwdReport, NiwdVerdict};
pub use purification::{
    purification_uniqueness, purify_state, transitivity_witness, PurificationFailure, PurificationResult,
    PurityCertificate, TransitivityWitness,
};
pub use purity::{is_pure_state, is_pure_transformation, is_reversible, Reversibility};
pub use readout::{physicalize_readout, ReadoutResult};
pub use steering::{steering_measurement, SteeringResult};
pub use stinespring::{dilation_uniqueness, pure_dilation_from_kraus, stinespring_dilate, DilationResult};

use crate::diagram::SystemType;
use crate::eval::EvalError;
use crate::linalg::{eigh_in, polar_in, CMatrix, CVector};
use crate::report::complex_rows;
use crate::theory::{BackendKind, TheoryBackend, TheoryError, TransferMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("causality violated by test {test}: residual {residual}")]
    CausalityViolation { test: String, residual: f64 },
    #[error("input is not pure")]
    NotPure,
    #[error("marginals differ by {error}")]
    MarginalMismatch { error: f64 },
    #[error("branches do not sum to the expected total (error {error})")]
    BranchSumMismatch { error: f64 },
    #[error("branch {branch} leaves the support of the state by {leakage}")]
    UnsupportedBranch { branch: usize, leakage: f64 },
    #[error("the {0} backend has no purification for this input")]
    BackendLacksPurification(&'static str),
    #[error("the {0} backend has no pure dilation for this transformation")]
    BackendLacksDilation(&'static str),
    #[error("test is not complete (residual {residual})")]
    IncompleteTest { residual: f64 },
    #[error("transformation is not deterministic (residual {residual})")]
    NotDeterministic { residual: f64 },
    #[error("purification failed: {0}")]
    PurificationFailure(PurificationFailure),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Result of recovering a reversible transformation relating two pure objects.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "verdict")]
pub enum Connection {
    Connected {
        #[serde(serialize_with = "crate::report::ser_complex_matrix")]
        unitary: CMatrix,
        /// Conjugation by `unitary`, the reversible transformation itself.
        channel: TransferMatrix,
        /// Max-abs difference after applying the recovered transformation.
        replay_error: f64,
    },
    Unconnected {
        replay_error: f64,
    },
}

impl Connection {
    pub fn is_connected(&self) -> bool {
        matches!(self, Connection::Connected { .. })
    }

    pub fn replay_error(&self) -> f64 {
        match self {
            Connection::Connected { replay_error, .. } | Connection::Unconnected { replay_error } => *replay_error,
        }
    }

    pub fn unitary_rows(&self) -> Option<Vec<Vec<[f64; 2]>>> {
        match self {
            Connection::Connected { unitary, .. } => Some(complex_rows(unitary)),
            Connection::Unconnected { .. } => None,
        }
    }
}

pub(crate) fn is_real_backend(backend: &TheoryBackend) -> bool {
    backend.kind() == BackendKind::QuantumReal
}

pub(crate) fn require_operator_backend(backend: &TheoryBackend, what: &'static str) -> Result<(), AuditError> {
    if backend.kind() == BackendKind::Classical {
        return Err(AuditError::Theory(TheoryError::Unsupported {
            backend: backend.name(),
            what,
        }));
    }
    Ok(())
}

/// Vector `ψ` with `|ψ⟩⟨ψ|` equal to a rank-one PSD operator, up to phase.
pub(crate) fn rank_one_vector(backend: &TheoryBackend, op: &CMatrix) -> Result<CVector, AuditError> {
    let (vals, vecs) = eigh_in(op, is_real_backend(backend));
    let tol = backend.tolerances().physical;
    if vals.len() > 1 && vals[1] > tol * vals[0].abs().max(1.0) {
        return Err(AuditError::NotPure);
    }
    Ok(vecs[0].scale(vals[0].max(0.0).sqrt()))
}

/// Finds `U` on the second factor with `(I ⊗ U)ψ = ψ2` up to phase, for vectors
/// in `C^dx ⊗ C^dy`. `ψ` reshapes to `M`, `(I⊗U)ψ` to `M Uᵀ`, so `Uᵀ` is the
/// unitary polar factor of `M† M2`.
pub(crate) fn recover_local_unitary(psi: &CVector, psi2: &CVector, dx: usize, dy: usize, real: bool) -> CMatrix {
    let m = CMatrix::from_fn(dx, dy, |x, y| psi[x * dy + y]);
    let m2 = CMatrix::from_fn(dx, dy, |x, y| psi2[x * dy + y]);
    polar_in(&(m.adjoint() * m2), real).transpose()
}

/// Conjugation by a unitary as a transfer matrix on `system`.
pub(crate) fn unitary_channel(backend: &TheoryBackend, system: &SystemType, u: &CMatrix) -> Result<TransferMatrix, AuditError> {
    Ok(backend.transfer_from_kraus(system, system, std::slice::from_ref(u))?)
}
