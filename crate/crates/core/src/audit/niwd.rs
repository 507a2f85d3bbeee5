use serde::Serialize;

use super::{is_real_backend, AuditError};
use crate::linalg::{eigh_in, numerical_rank};
use crate::theory::{BackendKind, TheoryBackend, TransferMatrix};
use crate::tomography::faithful_state;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict")]
pub enum NiwdVerdict {
    Holds { weights: Vec<f64> },
    Violated { branch: usize, deviation: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NiwdReport {
    pub verdict: NiwdVerdict,
    /// `p_x = Tr ∘ M_x ∘ ω` for the faithful state `ω`.
    pub weights: Vec<f64>,
    pub weight_sum: f64,
    /// `max |M_x − p_x I|` per branch.
    pub deviations: Vec<f64>,
    /// Choi ranks of the branches (operator backends).
    pub choi_ranks: Option<Vec<usize>>,
    pub tolerance: f64,
}

impl NiwdReport {
    pub fn holds(&self) -> bool {
        matches!(self.verdict, NiwdVerdict::Holds { .. })
    }
}

/// For a test whose branches sum to the identity, checks that every branch is
/// a multiple of the identity.
pub fn niwd_check(backend: &TheoryBackend, branches: &[TransferMatrix]) -> Result<NiwdReport, AuditError> {
    let total = backend.sum(branches)?;
    let a = total.input_type().clone();
    if total.output_type() != &a {
        return Err(AuditError::InvalidInput(format!("branches map {a} to {}", total.output_type())));
    }
    let id = backend.identity(&a)?;
    let error = total.max_abs_diff(&id);
    if error > backend.tolerances().normalization {
        return Err(AuditError::BranchSumMismatch { error });
    }
    let omega = faithful_state(backend, &a)?.state;
    let tr = backend.trace_effect(&a)?;
    let tol = backend.tolerances().physical;
    let mut weights = Vec::with_capacity(branches.len());
    let mut deviations = Vec::with_capacity(branches.len());
    for m in branches {
        let p = tr.pair(&backend.apply(m, &omega)?);
        deviations.push(m.max_abs_diff(&backend.scale(&id, p)?));
        weights.push(p);
    }
    let choi_ranks = match backend.kind() {
        BackendKind::Classical => None,
        _ => Some(
            branches
                .iter()
                .map(|m| Ok(numerical_rank(&eigh_in(&backend.choi(m)?, is_real_backend(backend)).0)))
                .collect::<Result<Vec<_>, AuditError>>()?,
        ),
    };
    let verdict = match deviations.iter().position(|&d| d > tol) {
        Some(branch) => NiwdVerdict::Violated {
            branch,
            deviation: deviations[branch],
        },
        None => NiwdVerdict::Holds { weights: weights.clone() },
    };
    Ok(NiwdReport {
        verdict,
        weight_sum: weights.iter().sum(),
        weights,
        deviations,
        choi_ranks,
        tolerance: tol,
    })
}
