use serde::Serialize;

use super::causality::{keep_prefix, marginal};
use super::{is_real_backend, rank_one_vector, AuditError};
use crate::diagram::SystemType;
use crate::linalg::{c, max_abs_c, numerical_rank, outer, to_complex, CMatrix, CVector};
use crate::theory::{BackendKind, EffectVector, StateVector, TheoryBackend};

#[derive(Clone, Debug, Serialize)]
pub struct SteeringResult {
    /// One effect on the purifying system per branch, in branch order.
    pub effects: Vec<EffectVector>,
    #[serde(serialize_with = "crate::report::ser_complex_matrices")]
    pub operators: Vec<CMatrix>,
    /// Index of the branch that absorbed the projector onto the kernel of the marginal.
    pub kernel_branch: usize,
    /// `max |Σ_x b_x − Tr_B|` in effect coordinates.
    pub completeness_residual: f64,
    /// `max_x max |(I ⊗ b_x) Ψ − ρ_x|` in state coordinates.
    pub reproduction_error: f64,
}

/// Schmidt data of a vector in `C^da ⊗ C^db`: coefficients, vectors on the
/// first factor and vectors on the second, so that `ψ = Σ σ_i u_i ⊗ w_i`.
fn schmidt(psi: &CVector, da: usize, db: usize, real: bool) -> (Vec<f64>, Vec<CVector>, Vec<CVector>) {
    let m = CMatrix::from_fn(da, db, |a, b| psi[a * db + b]);
    let (u, s, v_t) = if real {
        let svd = crate::linalg::real_part(&m).svd(true, true);
        (to_complex(&svd.u.unwrap()), svd.singular_values, to_complex(&svd.v_t.unwrap()))
    } else {
        let svd = m.svd(true, true);
        (svd.u.unwrap(), svd.singular_values, svd.v_t.unwrap())
    };
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let sigma = order.iter().map(|&i| s[i]).collect();
    let us = order.iter().map(|&i| u.column(i).into_owned()).collect();
    // rows of V† are v_i†; w_i = conj(v_i) is the row itself, transposed
    let ws = order.iter().map(|&i| v_t.row(i).transpose()).collect();
    (sigma, us, ws)
}

/// Effects `{b_x}` on `B` with `(I_A ⊗ b_x) Ψ = ρ_x`, for branches summing to the
/// marginal of the pure state `Ψ` on `A ⊗ B`. The projector onto the kernel of the
/// marginal on `B` is added to branch 0, so the effects sum to `Tr_B`.
pub fn steering_measurement(
    backend: &TheoryBackend,
    branches: &[StateVector],
    psi: &StateVector,
    a: &SystemType,
) -> Result<SteeringResult, AuditError> {
    if branches.is_empty() {
        return Err(AuditError::InvalidInput("no branches".into()));
    }
    if psi.system.len() < a.len() || psi.system.slice(0, a.len()) != *a {
        return Err(AuditError::InvalidInput(format!("{a} is not a prefix of {}", psi.system)));
    }
    let b = psi.system.slice(a.len(), psi.system.len());
    if let Some(x) = branches.iter().find(|x| x.system != *a) {
        return Err(AuditError::InvalidInput(format!("branch on {} instead of {a}", x.system)));
    }
    let rho = marginal(backend, psi, &keep_prefix(&psi.system, a.len()))?;
    let mut sum = branches[0].coords.clone();
    for x in &branches[1..] {
        sum += &x.coords;
    }
    let error = (sum - &rho.coords).amax();
    if error > backend.tolerances().normalization {
        return Err(AuditError::BranchSumMismatch { error });
    }
    let tol = backend.tolerances().physical;
    let operators = match backend.kind() {
        BackendKind::Classical => classical_steering(backend, branches, &rho, &b, tol)?,
        _ => {
            let v = rank_one_vector(backend, &backend.density(psi)?)?;
            let (da, db) = (backend.total_dim(a)?, backend.total_dim(&b)?);
            let (sigma, us, ws) = schmidt(&v, da, db, is_real_backend(backend));
            let sq: Vec<f64> = sigma.iter().map(|s| s * s).collect();
            let r = numerical_rank(&sq);
            let mut support = CMatrix::zeros(da, da);
            for u in &us[..r] {
                support += outer(u, u);
            }
            let mut ops = Vec::with_capacity(branches.len());
            for (x, branch) in branches.iter().enumerate() {
                let rx = backend.density(branch)?;
                let leakage = max_abs_c(&(&rx - &support * &rx * &support));
                if leakage > tol {
                    return Err(AuditError::UnsupportedBranch { branch: x, leakage });
                }
                let mut bx = CMatrix::zeros(db, db);
                for i in 0..r {
                    for j in 0..r {
                        let rij = us[i].dotc(&(&rx * &us[j])) / (sigma[i] * sigma[j]);
                        bx += outer(&ws[j], &ws[i]) * rij;
                    }
                }
                ops.push(bx);
            }
            let mut kernel = CMatrix::identity(db, db);
            for w in &ws[..r] {
                kernel -= outer(w, w);
            }
            ops[0] += kernel;
            for bx in &mut ops {
                *bx = crate::linalg::hermitian_part(bx);
            }
            ops
        }
    };
    let effects: Vec<EffectVector> = match backend.kind() {
        BackendKind::Classical => operators
            .iter()
            .map(|m| EffectVector::new(b.clone(), m.diagonal().map(|z| z.re)))
            .collect(),
        _ => operators
            .iter()
            .map(|m| backend.effect_from_operator(&b, m))
            .collect::<Result<_, _>>()?,
    };
    let mut total = effects[0].coords.clone();
    for e in &effects[1..] {
        total += &e.coords;
    }
    let completeness_residual = (total - backend.trace_effect(&b)?.coords).amax();
    let psi_t = backend.state_transfer(psi)?;
    let id_a = backend.identity(a)?;
    let mut reproduction_error = 0.0f64;
    for (e, branch) in effects.iter().zip(branches) {
        let steer = backend.tensor(&id_a, &backend.effect_transfer(e)?)?;
        let out = backend.state_of(&backend.compose(&psi_t, &steer)?)?;
        reproduction_error = reproduction_error.max((out.coords - &branch.coords).amax());
    }
    Ok(SteeringResult {
        effects,
        operators,
        kernel_branch: 0,
        completeness_residual,
        reproduction_error,
    })
}

/// A pure classical state is a point mass, so each branch must be a multiple of
/// the marginal; the steering effect is that multiple of the trace (as a diagonal).
fn classical_steering(
    backend: &TheoryBackend,
    branches: &[StateVector],
    rho: &StateVector,
    b: &SystemType,
    tol: f64,
) -> Result<Vec<CMatrix>, AuditError> {
    let db = backend.total_dim(b)?;
    let mut ops = Vec::with_capacity(branches.len());
    for (x, branch) in branches.iter().enumerate() {
        let weight = branch.coords.sum();
        let leakage = (&branch.coords - &rho.coords * weight).amax();
        if leakage > tol {
            return Err(AuditError::UnsupportedBranch { branch: x, leakage });
        }
        ops.push(CMatrix::from_diagonal_element(db, db, c(weight, 0.0)));
    }
    Ok(ops)
}
