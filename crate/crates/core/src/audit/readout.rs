use nalgebra::DVector;
use serde::Serialize;

use super::causality::determinism_residual;
use super::AuditError;
use crate::diagram::SystemType;
use crate::linalg::{c, CMatrix};
use crate::theory::{BackendKind, EffectVector, StateVector, TheoryBackend, TransferMatrix};

#[derive(Clone, Debug, Serialize)]
pub struct ReadoutResult {
    pub pointer: SystemType,
    /// `Σ_x M_x ⊗ γ_x : A → B ⊗ C`.
    pub transformation: TransferMatrix,
    pub pointer_states: Vec<StateVector>,
    pub reading_effects: Vec<EffectVector>,
    /// `|(I_B ⊗ c_x) ∘ M − M_x|` per branch.
    pub replay_errors: Vec<f64>,
    pub max_replay_error: f64,
}

/// Turns a complete test into one deterministic transformation with a pointer
/// system of dimension `|X|`, read out by the effects `c_x`.
pub fn physicalize_readout(backend: &TheoryBackend, branches: &[TransferMatrix]) -> Result<ReadoutResult, AuditError> {
    let total = backend.sum(branches)?;
    let residual = determinism_residual(backend, &total)?;
    if residual > backend.tolerances().normalization {
        return Err(AuditError::IncompleteTest { residual });
    }
    let n = branches.len();
    let pointer = TheoryBackend::ancilla(n);
    let (pointer_states, reading_effects) = pointer_basis(backend, &pointer, n)?;
    let parts: Vec<TransferMatrix> = branches
        .iter()
        .zip(&pointer_states)
        .map(|(m, g)| backend.tensor(m, &backend.state_transfer(g)?))
        .collect::<Result<_, _>>()?;
    let transformation = backend.sum(&parts)?;
    let b = branches[0].output_type().clone();
    let id_b = backend.identity(&b)?;
    let mut replay_errors = Vec::with_capacity(n);
    for (m, cx) in branches.iter().zip(&reading_effects) {
        let read = backend.tensor(&id_b, &backend.effect_transfer(cx)?)?;
        replay_errors.push(backend.compose(&transformation, &read)?.max_abs_diff(m));
    }
    let max_replay_error = replay_errors.iter().copied().fold(0.0, f64::max);
    Ok(ReadoutResult {
        pointer,
        transformation,
        pointer_states,
        reading_effects,
        replay_errors,
        max_replay_error,
    })
}

/// Perfectly distinguishable pointer states and the effects reading them out.
fn pointer_basis(backend: &TheoryBackend, pointer: &SystemType, n: usize) -> Result<(Vec<StateVector>, Vec<EffectVector>), AuditError> {
    if pointer.is_unit() {
        let one = DVector::from_element(1, 1.0);
        return Ok((
            vec![StateVector::new(SystemType::unit(), one.clone())],
            vec![EffectVector::new(SystemType::unit(), one)],
        ));
    }
    let mut states = Vec::with_capacity(n);
    let mut effects = Vec::with_capacity(n);
    for x in 0..n {
        match backend.kind() {
            BackendKind::Classical => {
                let mut v = DVector::zeros(n);
                v[x] = 1.0;
                states.push(StateVector::new(pointer.clone(), v.clone()));
                effects.push(EffectVector::new(pointer.clone(), v));
            }
            _ => {
                let mut p = CMatrix::zeros(n, n);
                p[(x, x)] = c(1.0, 0.0);
                states.push(backend.state_from_density(pointer, &p)?);
                effects.push(backend.effect_from_operator(pointer, &p)?);
            }
        }
    }
    Ok((states, effects))
}
