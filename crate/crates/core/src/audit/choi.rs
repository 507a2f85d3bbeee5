use serde::Serialize;

use super::purify_state;
use super::AuditError;
use crate::diagram::SystemType;
use crate::linalg::{matrix_rank, RMatrix};
use crate::theory::{BackendKind, StateVector, TheoryBackend, TransferMatrix};
use crate::tomography::{faithful_state, FaithfulState};

/// Rank of the coefficient matrix `P` of `Φ`; `M ↦ (M ⊗ I)Φ` acts as `T ↦ T P`
/// on full transfer matrices and is injective iff `P` has full row rank.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InjectivityCertificate {
    pub rank: usize,
    pub input_dim: usize,
    pub injective: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChoiCorrespondence {
    pub system: SystemType,
    pub reference: SystemType,
    pub faithful: FaithfulState,
    /// The purification `Φ` of the faithful state, on `A ⊗ C`.
    pub phi: StateVector,
    pub injectivity: InjectivityCertificate,
    #[serde(skip)]
    coefficients: RMatrix,
}

impl ChoiCorrespondence {
    /// `Φ_M = (M ⊗ I_C) Φ`.
    pub fn image(&self, backend: &TheoryBackend, m: &TransferMatrix) -> Result<StateVector, AuditError> {
        if m.input_type() != &self.system {
            return Err(AuditError::InvalidInput(format!("map acts on {}, not {}", m.input_type(), self.system)));
        }
        let ext = backend.tensor(m, &backend.identity(&self.reference)?)?;
        Ok(backend.apply(&ext, &self.phi)?)
    }

    /// Solves `T P = Φ_M` for the transfer matrix `T : A → B`.
    pub fn recover(&self, backend: &TheoryBackend, phi_m: &StateVector, output: &SystemType) -> Result<TransferMatrix, AuditError> {
        if phi_m.system != output.tensor(&self.reference) {
            return Err(AuditError::InvalidInput(format!("state on {}", phi_m.system)));
        }
        let nb = backend.full_dim(output)?;
        let nc = self.coefficients.ncols();
        let q = fold(&backend.embed(&phi_m.system, &phi_m.coords)?, nb, nc);
        // T = Q P^{-1} via the transposed system Pᵀ Tᵀ = Qᵀ
        let lu = self.coefficients.transpose().lu();
        let tt = lu
            .solve(&q.transpose())
            .ok_or_else(|| AuditError::InvalidInput("correspondence is not invertible".into()))?;
        Ok(backend.transfer_from_full(&self.system, output, tt.transpose())?)
    }

    pub fn round_trip_error(&self, backend: &TheoryBackend, m: &TransferMatrix) -> Result<f64, AuditError> {
        let back = self.recover(backend, &self.image(backend, m)?, m.output_type())?;
        Ok(back.max_abs_diff(m))
    }
}

fn fold(v: &nalgebra::DVector<f64>, rows: usize, cols: usize) -> RMatrix {
    RMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}

/// Builds `Φ` from the faithful state of `A` and certifies injectivity.
pub fn choi_correspondence(backend: &TheoryBackend, a: &SystemType) -> Result<ChoiCorrespondence, AuditError> {
    if backend.kind() == BackendKind::Classical {
        return Err(AuditError::BackendLacksPurification(backend.name()));
    }
    let faithful = faithful_state(backend, a)?;
    let pur = purify_state(backend, &faithful.state)?;
    let reference = pur.purifying_system;
    let phi = pur.pure_state;
    let na = backend.full_dim(a)?;
    let nc = backend.full_dim(&reference)?;
    let coefficients = fold(&backend.embed(&phi.system, &phi.coords)?, na, nc);
    let rank = matrix_rank(&coefficients);
    Ok(ChoiCorrespondence {
        system: a.clone(),
        reference,
        faithful,
        phi,
        injectivity: InjectivityCertificate {
            rank,
            input_dim: na,
            injective: rank == na,
        },
        coefficients,
    })
}
