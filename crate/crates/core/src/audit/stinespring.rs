use serde::Serialize;

use super::causality::{determinism_residual, marginal_transfer};
use super::purity::is_pure_transformation;
use super::{is_real_backend, rank_one_vector, recover_local_unitary, unitary_channel, AuditError, Connection};
use crate::diagram::SystemType;
use crate::linalg::{eigh_in, numerical_rank, CMatrix};
use crate::theory::{kraus_from_vector, BackendKind, TheoryBackend, TransferMatrix};

#[derive(Clone, Debug, Serialize)]
pub struct DilationResult {
    pub environment: SystemType,
    /// Conjugation by the isometry, `A → B ⊗ C`.
    pub pure_transformation: TransferMatrix,
    #[serde(serialize_with = "crate::report::ser_complex_matrix")]
    pub isometry: CMatrix,
    #[serde(serialize_with = "crate::report::ser_complex_matrices")]
    pub kraus: Vec<CMatrix>,
    pub choi_rank: usize,
    /// `max |(I_B ⊗ Tr_C) P − M|` over transfer-matrix entries.
    pub marginal_error: f64,
}

/// Minimal dilation of a deterministic transformation through the
/// eigendecomposition of its Choi matrix: environment `@rank`, or the unit
/// system when the transformation is already pure.
pub fn stinespring_dilate(backend: &TheoryBackend, m: &TransferMatrix) -> Result<DilationResult, AuditError> {
    let residual = determinism_residual(backend, m)?;
    if residual > backend.tolerances().normalization {
        return Err(AuditError::NotDeterministic { residual });
    }
    if backend.kind() == BackendKind::Classical {
        if !is_pure_transformation(backend, m)? {
            return Err(AuditError::BackendLacksDilation(backend.name()));
        }
        return Ok(DilationResult {
            environment: SystemType::unit(),
            pure_transformation: m.clone(),
            isometry: crate::linalg::to_complex(m.matrix()),
            kraus: Vec::new(),
            choi_rank: 1,
            marginal_error: 0.0,
        });
    }
    let choi = backend.choi(m)?;
    let (vals, vecs) = eigh_in(&choi, is_real_backend(backend));
    let r = numerical_rank(&vals).max(1);
    let (di, dout) = (backend.total_dim(m.input_type())?, backend.total_dim(m.output_type())?);
    let kraus: Vec<CMatrix> = (0..r)
        .map(|i| kraus_from_vector(&vecs[i].scale(vals[i].max(0.0).sqrt()), di, dout))
        .collect();
    dilation_with(backend, m, kraus, r)
}

/// The (not necessarily minimal) dilation `V = Σ_i K_i ⊗ |i⟩` with environment `@n`.
pub fn pure_dilation_from_kraus(
    backend: &TheoryBackend,
    input: &SystemType,
    output: &SystemType,
    kraus: &[CMatrix],
) -> Result<DilationResult, AuditError> {
    super::require_operator_backend(backend, "Kraus dilations")?;
    if kraus.is_empty() {
        return Err(AuditError::InvalidInput("no Kraus operators".into()));
    }
    let m = backend.transfer_from_kraus(input, output, kraus)?;
    let residual = determinism_residual(backend, &m)?;
    if residual > backend.tolerances().normalization {
        return Err(AuditError::NotDeterministic { residual });
    }
    let rank = numerical_rank(&eigh_in(&backend.choi(&m)?, is_real_backend(backend)).0);
    let mut res = dilation_with(backend, &m, kraus.to_vec(), kraus.len())?;
    res.choi_rank = rank;
    Ok(res)
}

fn dilation_with(backend: &TheoryBackend, m: &TransferMatrix, kraus: Vec<CMatrix>, n: usize) -> Result<DilationResult, AuditError> {
    let (dout, di) = kraus[0].shape();
    let mut v = CMatrix::zeros(dout * n, di);
    for (i, k) in kraus.iter().enumerate() {
        for b in 0..dout {
            for a in 0..di {
                v[(b * n + i, a)] = k[(b, a)];
            }
        }
    }
    let environment = TheoryBackend::ancilla(n);
    let joint = m.output_type().tensor(&environment);
    let pure_transformation = backend.transfer_from_kraus(m.input_type(), &joint, std::slice::from_ref(&v))?;
    let discard = marginal_transfer(backend, &joint, &prefix_mask(&joint, m.output_type().len()))?;
    let reduced = backend.compose(&pure_transformation, &discard)?;
    Ok(DilationResult {
        environment,
        marginal_error: reduced.max_abs_diff(m),
        pure_transformation,
        isometry: v,
        choi_rank: n,
        kraus,
    })
}

fn prefix_mask(s: &SystemType, n: usize) -> Vec<bool> {
    (0..s.len()).map(|i| i < n).collect()
}

/// Finds a reversible `U` on the environment with `(I_B ⊗ U) ∘ P = P2` for two
/// pure dilations `A → B ⊗ C` of the same transformation.
pub fn dilation_uniqueness(
    backend: &TheoryBackend,
    p: &TransferMatrix,
    p2: &TransferMatrix,
    environment: &SystemType,
) -> Result<Connection, AuditError> {
    if p.input_type() != p2.input_type() || p.output_type() != p2.output_type() {
        return Err(AuditError::InvalidInput("dilations have different types".into()));
    }
    let out = p.output_type();
    let nb = out.len().checked_sub(environment.len()).filter(|&nb| out.slice(nb, out.len()) == *environment);
    let Some(nb) = nb else {
        return Err(AuditError::InvalidInput(format!("{environment} is not a suffix of {out}")));
    };
    if !is_pure_transformation(backend, p)? || !is_pure_transformation(backend, p2)? {
        return Err(AuditError::NotPure);
    }
    let discard = marginal_transfer(backend, out, &prefix_mask(out, nb))?;
    let error = backend.compose(p, &discard)?.max_abs_diff(&backend.compose(p2, &discard)?);
    if error > backend.tolerances().physical {
        return Err(AuditError::MarginalMismatch { error });
    }
    let b = out.slice(0, nb);
    let (unitary, channel) = match backend.kind() {
        BackendKind::Classical => {
            let d = backend.total_dim(environment)?;
            (CMatrix::identity(d, d), backend.identity(environment)?)
        }
        _ => {
            let v = rank_one_vector(backend, &backend.choi(p)?)?;
            let v2 = rank_one_vector(backend, &backend.choi(p2)?)?;
            let dx = backend.total_dim(p.input_type())? * backend.total_dim(&b)?;
            let dy = backend.total_dim(environment)?;
            let u = recover_local_unitary(&v, &v2, dx, dy, is_real_backend(backend));
            let ch = unitary_channel(backend, environment, &u)?;
            (u, ch)
        }
    };
    let lifted = backend.tensor(&backend.identity(&b)?, &channel)?;
    let replay_error = backend.compose(p, &lifted)?.max_abs_diff(p2);
    Ok(if replay_error <= backend.tolerances().physical {
        Connection::Connected {
            unitary,
            channel,
            replay_error,
        }
    } else {
        Connection::Unconnected { replay_error }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs_c};
    use crate::random;

    fn q(d: usize) -> (TheoryBackend, SystemType) {
        (TheoryBackend::quantum().with_system("a", d).unwrap(), SystemType::primitive("a"))
    }

    fn amplitude_damping(g: f64) -> Vec<CMatrix> {
        vec![
            CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c((1.0 - g).sqrt(), 0.)]),
            CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(g.sqrt(), 0.), c(0., 0.), c(0., 0.)]),
        ]
    }

    #[test]
    fn unitary_channels_need_no_environment() {
        let (b, s) = q(2);
        let mut rng = random::rng(1);
        let u = random::random_unitary(&mut rng, 2, random::field_of(b.kind()));
        let m = b.transfer_from_kraus(&s, &s, &[u]).unwrap();
        let d = stinespring_dilate(&b, &m).unwrap();
        assert!(d.environment.is_unit());
        assert!(d.pure_transformation.max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn depolarizing_needs_four_levels() {
        let (b, s) = q(2);
        let m = b.transfer_from_choi(&s, &s, &CMatrix::identity(4, 4).scale(0.5)).unwrap();
        let d = stinespring_dilate(&b, &m).unwrap();
        assert_eq!(d.environment, SystemType::primitive("@4"));
        assert!(d.marginal_error <= 1e-10);
    }

    #[test]
    fn amplitude_damping_dilation() {
        let (b, s) = q(2);
        let m = b.transfer_from_kraus(&s, &s, &amplitude_damping(0.5)).unwrap();
        let d = stinespring_dilate(&b, &m).unwrap();
        assert_eq!(d.choi_rank, 2);
        assert!(d.marginal_error <= 1e-10);
        // oracle: the isometry condition V†V = I and the Kraus completeness
        assert!(max_abs_c(&(d.isometry.adjoint() * &d.isometry - CMatrix::identity(2, 2))) < 1e-12);
        assert!(is_pure_transformation(&b, &d.pure_transformation).unwrap());
    }

    #[test]
    fn random_channels_dilate_minimally() {
        for dim in [2, 3] {
            let (b, s) = q(dim);
            let mut rng = random::rng(dim as u64 + 40);
            for n in 1..=dim {
                let ks = random::random_channel(&mut rng, dim, dim, n, random::field_of(b.kind()));
                let m = b.transfer_from_kraus(&s, &s, &ks).unwrap();
                let d = stinespring_dilate(&b, &m).unwrap();
                assert_eq!(d.choi_rank, n);
                assert_eq!(b.total_dim(&d.environment).unwrap(), n);
                assert!(d.marginal_error <= 1e-10);
            }
        }
    }

    #[test]
    fn non_deterministic_and_classical_inputs_are_rejected() {
        let (b, s) = q(2);
        let half = b.transfer_from_choi(&s, &s, &CMatrix::identity(4, 4).scale(0.25)).unwrap();
        assert!(matches!(stinespring_dilate(&b, &half), Err(AuditError::NotDeterministic { .. })));
        let cb = TheoryBackend::classical().with_system("x", 2).unwrap();
        let cs = SystemType::primitive("x");
        assert_eq!(
            stinespring_dilate(&cb, &cb.identity(&cs).unwrap()).unwrap_err(),
            AuditError::BackendLacksDilation("classical")
        );
    }

    #[test]
    fn different_kraus_decompositions_are_connected() {
        let (b, s) = q(2);
        let ks = amplitude_damping(0.5);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mixed = vec![(&ks[0] + &ks[1]).scale(r), (&ks[0] - &ks[1]).scale(r)];
        let d1 = pure_dilation_from_kraus(&b, &s, &s, &ks).unwrap();
        let d2 = pure_dilation_from_kraus(&b, &s, &s, &mixed).unwrap();
        assert_eq!(d1.environment, d2.environment);
        let conn = dilation_uniqueness(&b, &d1.pure_transformation, &d2.pure_transformation, &d1.environment).unwrap();
        assert!(conn.replay_error() <= 1e-9);
        // oracle: the mixing matrix is a Hadamard, so the channel is conjugation by it
        let h = CMatrix::from_row_slice(2, 2, &[c(r, 0.), c(r, 0.), c(r, 0.), c(-r, 0.)]);
        let Connection::Connected { channel, .. } = conn else { panic!() };
        assert!(channel.max_abs_diff(&b.transfer_from_kraus(&d1.environment, &d1.environment, &[h]).unwrap()) < 1e-9);
    }

    #[test]
    fn random_environment_unitary_is_recovered() {
        let (b, s) = q(2);
        let mut rng = random::rng(77);
        let f = random::field_of(b.kind());
        let ks = random::random_channel(&mut rng, 2, 2, 3, f);
        let m = b.transfer_from_kraus(&s, &s, &ks).unwrap();
        let d = stinespring_dilate(&b, &m).unwrap();
        let env = d.environment.clone();
        let u = random::random_unitary(&mut rng, 3, f);
        let uch = b.transfer_from_kraus(&env, &env, &[u]).unwrap();
        let p2 = b.compose(&d.pure_transformation, &b.tensor(&b.identity(&s).unwrap(), &uch).unwrap()).unwrap();
        let conn = dilation_uniqueness(&b, &d.pure_transformation, &p2, &env).unwrap();
        let Connection::Connected { channel, replay_error, .. } = conn else { panic!() };
        assert!(replay_error <= 1e-9);
        assert!(channel.max_abs_diff(&uch) < 1e-9);
        let same = dilation_uniqueness(&b, &d.pure_transformation, &d.pure_transformation, &env).unwrap();
        let Connection::Connected { channel, .. } = same else { panic!() };
        assert!(channel.max_abs_diff(&b.identity(&env).unwrap()) < 1e-9);
    }

    #[test]
    fn real_backend_dilation() {
        let b = TheoryBackend::quantum_real().with_system("r", 2).unwrap();
        let s = SystemType::primitive("r");
        let mut rng = random::rng(5);
        let ks = random::random_channel(&mut rng, 2, 2, 2, random::field_of(b.kind()));
        let m = b.transfer_from_kraus(&s, &s, &ks).unwrap();
        let d = stinespring_dilate(&b, &m).unwrap();
        assert_eq!(d.choi_rank, 2);
        assert!(d.marginal_error <= 1e-10);
        assert!(crate::linalg::is_real(&d.isometry, 1e-12));
    }
}
