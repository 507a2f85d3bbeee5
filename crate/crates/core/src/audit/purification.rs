use std::fmt;

use serde::Serialize;

use super::causality::{keep_prefix, marginal};
use super::purity::is_pure_state;
use super::{is_real_backend, rank_one_vector, recover_local_unitary, unitary_channel, AuditError, Connection};
use crate::diagram::SystemType;
use crate::linalg::{eigh_in, numerical_rank, outer, CMatrix, CVector, RMatrix};
use crate::theory::{BackendKind, StateVector, TheoryBackend, TransferMatrix};

/// Rank and second-largest eigenvalue (or entry) of the purifying state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PurityCertificate {
    pub rank: usize,
    pub second_eigenvalue: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PurificationResult {
    pub purifying_system: SystemType,
    pub pure_state: StateVector,
    pub marginal_error: f64,
    pub purity_certificate: PurityCertificate,
}

/// Why a state has no purification in the backend.
///
/// A pure classical joint state is a point mass, and every marginal of a point
/// mass is again a point mass; a state with `support.len() > 1` therefore has no
/// pure extension on any system.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PurificationFailure {
    pub backend: &'static str,
    pub support: Vec<usize>,
    pub probabilities: Vec<f64>,
}

impl fmt::Display for PurificationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "state is supported on {} outcomes {:?}; pure joint states of the {} backend are point masses and have point-mass marginals",
            self.support.len(),
            self.support,
            self.backend
        )
    }
}

/// A pure vector `Σ √p_i |v_i⟩ ⊗ |i⟩` with marginal `ρ`, and the purifying dimension.
pub(crate) fn purifying_vector(backend: &TheoryBackend, rho: &CMatrix) -> (CVector, usize) {
    let (vals, vecs) = eigh_in(rho, is_real_backend(backend));
    let r = numerical_rank(&vals).max(1);
    let d = rho.nrows();
    let mut psi = CVector::zeros(d * r);
    for i in 0..r {
        let w = vals[i].max(0.0).sqrt();
        for a in 0..d {
            psi[a * r + i] = vecs[i][a] * w;
        }
    }
    (psi, r)
}

/// Purifies `rho` on `A` with purifying system `@rank` (the unit system for pure inputs).
pub fn purify_state(backend: &TheoryBackend, rho: &StateVector) -> Result<PurificationResult, AuditError> {
    let norm = backend.trace_effect(&rho.system)?.pair(rho);
    if (norm - 1.0).abs() > backend.tolerances().normalization {
        return Err(AuditError::InvalidInput(format!("state has trace {norm}")));
    }
    if backend.kind() == BackendKind::Classical {
        let tol = backend.tolerances().physical;
        let support: Vec<usize> = (0..rho.coords.len()).filter(|&i| rho.coords[i].abs() > tol).collect();
        if support.len() > 1 {
            return Err(AuditError::PurificationFailure(PurificationFailure {
                backend: backend.name(),
                support,
                probabilities: rho.coords.iter().copied().collect(),
            }));
        }
        let mut sorted: Vec<f64> = rho.coords.iter().copied().collect();
        sorted.sort_by(|a, b| b.total_cmp(a));
        return Ok(PurificationResult {
            purifying_system: SystemType::unit(),
            pure_state: rho.clone(),
            marginal_error: 0.0,
            purity_certificate: PurityCertificate {
                rank: support.len(),
                second_eigenvalue: sorted.get(1).copied().unwrap_or(0.0),
            },
        });
    }
    let density = backend.density(rho)?;
    let (psi, r) = purifying_vector(backend, &density);
    let b = TheoryBackend::ancilla(r);
    let joint = rho.system.tensor(&b);
    let pure_state = backend.state_from_ket(&joint, &psi)?;
    let m = marginal(backend, &pure_state, &keep_prefix(&joint, rho.system.len()))?;
    let marginal_error = (m.coords - &rho.coords).amax();
    let (vals, _) = eigh_in(&backend.density(&pure_state)?, is_real_backend(backend));
    Ok(PurificationResult {
        purifying_system: b,
        pure_state,
        marginal_error,
        purity_certificate: PurityCertificate {
            rank: numerical_rank(&vals),
            second_eigenvalue: vals.get(1).copied().unwrap_or(0.0),
        },
    })
}

fn split_prefix(joint: &SystemType, a: &SystemType) -> Result<SystemType, AuditError> {
    if joint.len() < a.len() || joint.slice(0, a.len()) != *a {
        return Err(AuditError::InvalidInput(format!("{a} is not a prefix of {joint}")));
    }
    Ok(joint.slice(a.len(), joint.len()))
}

fn point_mass(state: &StateVector, tol: f64) -> Result<usize, AuditError> {
    let support: Vec<usize> = (0..state.coords.len()).filter(|&i| state.coords[i].abs() > tol).collect();
    match support[..] {
        [i] => Ok(i),
        _ => Err(AuditError::NotPure),
    }
}

fn transposition(d: usize, i: usize, j: usize) -> RMatrix {
    let mut p = RMatrix::identity(d, d);
    if i != j {
        p[(i, i)] = 0.0;
        p[(j, j)] = 0.0;
        p[(i, j)] = 1.0;
        p[(j, i)] = 1.0;
    }
    p
}

/// Finds a reversible `U` on `B` with `(I_A ⊗ U) Ψ = Ψ2`, for two pure states on
/// `A ⊗ B` with the same marginal on `A`.
pub fn purification_uniqueness(
    backend: &TheoryBackend,
    psi: &StateVector,
    psi2: &StateVector,
    a: &SystemType,
) -> Result<Connection, AuditError> {
    if psi.system != psi2.system {
        return Err(AuditError::InvalidInput(format!("{} vs {}", psi.system, psi2.system)));
    }
    let b = split_prefix(&psi.system, a)?;
    if !is_pure_state(backend, psi)? || !is_pure_state(backend, psi2)? {
        return Err(AuditError::NotPure);
    }
    let keep = keep_prefix(&psi.system, a.len());
    let error = (marginal(backend, psi, &keep)?.coords - marginal(backend, psi2, &keep)?.coords).amax();
    if error > backend.tolerances().physical {
        return Err(AuditError::MarginalMismatch { error });
    }
    let (unitary, u_on_b) = match backend.kind() {
        BackendKind::Classical => {
            let tol = backend.tolerances().physical;
            let db = backend.total_dim(&b)?;
            let (i, j) = (point_mass(psi, tol)? % db, point_mass(psi2, tol)? % db);
            let p = transposition(db, i, j);
            let u = crate::linalg::to_complex(&p);
            (u, backend.transfer_from_full(&b, &b, p)?)
        }
        _ => {
            let v = rank_one_vector(backend, &backend.density(psi)?)?;
            let v2 = rank_one_vector(backend, &backend.density(psi2)?)?;
            let (dx, dy) = (backend.total_dim(a)?, backend.total_dim(&b)?);
            let u = recover_local_unitary(&v, &v2, dx, dy, is_real_backend(backend));
            let ch = unitary_channel(backend, &b, &u)?;
            (u, ch)
        }
    };
    let lifted = backend.tensor(&backend.identity(a)?, &u_on_b)?;
    let replay_error = (backend.apply(&lifted, psi)?.coords - &psi2.coords).amax();
    Ok(connection(backend, unitary, u_on_b, replay_error))
}

fn connection(backend: &TheoryBackend, unitary: CMatrix, channel: TransferMatrix, replay_error: f64) -> Connection {
    if replay_error <= backend.tolerances().physical {
        Connection::Connected {
            unitary,
            channel,
            replay_error,
        }
    } else {
        Connection::Unconnected { replay_error }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TransitivityWitness {
    #[serde(serialize_with = "crate::report::ser_complex_matrix")]
    pub unitary: CMatrix,
    pub channel: TransferMatrix,
    pub replay_error: f64,
}

/// A reversible transformation taking the pure state `alpha` to `alpha2`: a
/// Householder reflection (after phase alignment) or a transposition of point masses.
pub fn transitivity_witness(
    backend: &TheoryBackend,
    alpha: &StateVector,
    alpha2: &StateVector,
) -> Result<TransitivityWitness, AuditError> {
    if alpha.system != alpha2.system {
        return Err(AuditError::InvalidInput(format!("{} vs {}", alpha.system, alpha2.system)));
    }
    if !is_pure_state(backend, alpha)? || !is_pure_state(backend, alpha2)? {
        return Err(AuditError::NotPure);
    }
    let s = &alpha.system;
    let (unitary, channel) = match backend.kind() {
        BackendKind::Classical => {
            let tol = backend.tolerances().physical;
            let p = transposition(backend.total_dim(s)?, point_mass(alpha, tol)?, point_mass(alpha2, tol)?);
            (crate::linalg::to_complex(&p), backend.transfer_from_full(s, s, p)?)
        }
        _ => {
            let u = rank_one_vector(backend, &backend.density(alpha)?)?;
            let v = rank_one_vector(backend, &backend.density(alpha2)?)?;
            let u = u.unscale(u.norm());
            let v = v.unscale(v.norm());
            let overlap = u.dotc(&v);
            let v = if overlap.norm() > 0.0 {
                v * (overlap.conj() / overlap.norm())
            } else {
                v
            };
            let diff = &u - &v;
            let d = u.len();
            let h = if diff.norm() < 1e-15 {
                CMatrix::identity(d, d)
            } else {
                let w = diff.unscale(diff.norm());
                CMatrix::identity(d, d) - outer(&w, &w).scale(2.0)
            };
            let ch = unitary_channel(backend, s, &h)?;
            (h, ch)
        }
    };
    let replay_error = (backend.apply(&channel, alpha)?.coords - &alpha2.coords).amax();
    Ok(TransitivityWitness {
        unitary,
        channel,
        replay_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs_c, partial_trace};
    use crate::random;

    fn q(d: usize) -> (TheoryBackend, SystemType) {
        (TheoryBackend::quantum().with_system("a", d).unwrap(), SystemType::primitive("a"))
    }

    fn ket(v: &[(f64, f64)]) -> CVector {
        CVector::from_iterator(v.len(), v.iter().map(|&(re, im)| c(re, im)))
    }

    #[test]
    fn maximally_mixed_qubit_purifies_to_a_maximally_entangled_state() {
        let (b, s) = q(2);
        let rho = b.state_from_density(&s, &CMatrix::identity(2, 2).scale(0.5)).unwrap();
        let p = purify_state(&b, &rho).unwrap();
        assert_eq!(p.purifying_system, SystemType::primitive("@2"));
        assert!(p.marginal_error <= 1e-15);
        assert_eq!(p.purity_certificate.rank, 1);
        // oracle: partial trace of the joint density matrix, and maximal entanglement
        let joint = b.density(&p.pure_state).unwrap();
        let reduced = partial_trace(&joint, &[2, 2], &[true, false]);
        assert!(max_abs_c(&(reduced - CMatrix::identity(2, 2).scale(0.5))) < 1e-15);
        let other = partial_trace(&joint, &[2, 2], &[false, true]);
        assert!(max_abs_c(&(other - CMatrix::identity(2, 2).scale(0.5))) < 1e-15);
    }

    #[test]
    fn pure_input_needs_no_purifying_system() {
        let (b, s) = q(3);
        let mut rng = random::rng(5);
        let v = random::random_ket(&mut rng, 3, random::field_of(b.kind()));
        let alpha = b.state_from_ket(&s, &v).unwrap();
        let p = purify_state(&b, &alpha).unwrap();
        assert!(p.purifying_system.is_unit());
        assert!((p.pure_state.coords - &alpha.coords).amax() < 1e-12);
    }

    #[test]
    fn random_purifications_have_rank_many_purifying_levels() {
        for d in 2..=4 {
            let (b, s) = q(d);
            let mut rng = random::rng(d as u64);
            for rank in 1..=d {
                let rho = random::random_density(&mut rng, d, rank, random::field_of(b.kind()));
                let st = b.state_from_density(&s, &rho).unwrap();
                let p = purify_state(&b, &st).unwrap();
                let dim = b.total_dim(&p.purifying_system).unwrap();
                assert_eq!(dim, rank);
                assert!(p.marginal_error <= 1e-10);
                assert!(is_pure_state(&b, &p.pure_state).unwrap());
                let reduced = partial_trace(&b.density(&p.pure_state).unwrap(), &[d, dim], &[true, false]);
                assert!(max_abs_c(&(reduced - &rho)) < 1e-12);
            }
        }
    }

    #[test]
    fn real_backend_purifies_with_real_amplitudes() {
        let b = TheoryBackend::quantum_real().with_system("r", 3).unwrap();
        let s = SystemType::primitive("r");
        let mut rng = random::rng(9);
        let rho = random::random_density(&mut rng, 3, 3, random::field_of(b.kind()));
        let st = b.state_from_density(&s, &rho).unwrap();
        let p = purify_state(&b, &st).unwrap();
        assert!(p.marginal_error <= 1e-12);
        assert!(crate::linalg::is_real(&b.density(&p.pure_state).unwrap(), 1e-15));
    }

    /// Every pure joint state of a classical `d_A × d_B` system is a point mass,
    /// and each of their marginals is a point mass.
    fn classical_pure_marginals_are_point_masses(da: usize, db: usize) -> bool {
        (0..da * db).all(|k| {
            let joint: Vec<f64> = (0..da * db).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
            let mut row = vec![0.0; da];
            for (i, p) in joint.iter().enumerate() {
                row[i / db] += p;
            }
            row.iter().filter(|&&x| x > 0.0).count() == 1
        })
    }

    #[test]
    fn classical_purification_fails_exactly_on_mixed_states() {
        for d in 1..=3 {
            for db in 1..=3 {
                assert!(classical_pure_marginals_are_point_masses(d, db));
            }
            let b = TheoryBackend::classical().with_system("x", d).unwrap();
            let s = SystemType::primitive("x");
            // all distributions with denominators 4 on the simplex
            let grid = 4usize;
            let mut points = Vec::new();
            let mut stack = vec![(Vec::new(), grid)];
            while let Some((prefix, left)) = stack.pop() {
                if prefix.len() + 1 == d {
                    let mut p = prefix.clone();
                    p.push(left);
                    points.push(p);
                    continue;
                }
                for k in 0..=left {
                    let mut p = prefix.clone();
                    p.push(k);
                    stack.push((p, left - k));
                }
            }
            for pt in points {
                let probs: Vec<f64> = pt.iter().map(|&k| k as f64 / grid as f64).collect();
                let st = b.state_from_probs(&s, &probs).unwrap();
                let point_mass = pt.iter().filter(|&&k| k > 0).count() == 1;
                match purify_state(&b, &st) {
                    Ok(p) => {
                        assert!(point_mass, "{probs:?}");
                        assert!(is_pure_state(&b, &p.pure_state).unwrap());
                    }
                    Err(AuditError::PurificationFailure(f)) => {
                        assert!(!point_mass, "{probs:?}");
                        assert!(f.support.len() > 1);
                    }
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn bell_states_are_connected_by_x() {
        let (b, s) = q(2);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let ss = s.tensor(&s);
        let phi = b.state_from_ket(&ss, &ket(&[(r, 0.), (0., 0.), (0., 0.), (r, 0.)])).unwrap();
        let psi = b.state_from_ket(&ss, &ket(&[(0., 0.), (r, 0.), (r, 0.), (0., 0.)])).unwrap();
        let conn = purification_uniqueness(&b, &phi, &psi, &s).unwrap();
        let Connection::Connected { channel, replay_error, .. } = conn else { panic!() };
        assert!(replay_error < 1e-12);
        let x = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        assert!(channel.max_abs_diff(&b.transfer_from_kraus(&s, &s, &[x]).unwrap()) < 1e-12);

        let same = purification_uniqueness(&b, &phi, &phi, &s).unwrap();
        let Connection::Connected { channel, .. } = same else { panic!() };
        assert!(channel.max_abs_diff(&b.identity(&s).unwrap()) < 1e-12);
    }

    #[test]
    fn recovers_random_local_unitary_as_a_channel() {
        let (b, s) = q(3);
        let mut rng = random::rng(11);
        let f = random::field_of(b.kind());
        for rank in [3, 2] {
            let rho = random::random_density(&mut rng, 3, rank, f);
            let p = purify_state(&b, &b.state_from_density(&s, &rho).unwrap()).unwrap();
            let env = p.purifying_system.clone();
            let de = b.total_dim(&env).unwrap();
            let v = random::random_unitary(&mut rng, de, f);
            let vch = b.transfer_from_kraus(&env, &env, &[v]).unwrap();
            let psi2 = b.apply(&b.tensor(&b.identity(&s).unwrap(), &vch).unwrap(), &p.pure_state).unwrap();
            let conn = purification_uniqueness(&b, &p.pure_state, &psi2, &s).unwrap();
            assert!(conn.replay_error() <= 1e-9);
            let Connection::Connected { channel, .. } = conn else { panic!() };
            // full Schmidt rank pins the unitary down completely
            if rank == 3 {
                assert!(channel.max_abs_diff(&vch) < 1e-9);
            }
        }
    }

    #[test]
    fn mismatched_marginals_are_rejected() {
        let (b, s) = q(2);
        let ss = s.tensor(&s);
        let a = b.state_from_ket(&ss, &ket(&[(1., 0.), (0., 0.), (0., 0.), (0., 0.)])).unwrap();
        let a2 = b.state_from_ket(&ss, &ket(&[(0., 0.), (0., 0.), (1., 0.), (0., 0.)])).unwrap();
        assert!(matches!(
            purification_uniqueness(&b, &a, &a2, &s),
            Err(AuditError::MarginalMismatch { .. })
        ));
    }

    #[test]
    fn transitivity() {
        let (b, s) = q(2);
        let zero = b.state_from_ket(&s, &ket(&[(1., 0.), (0., 0.)])).unwrap();
        let one = b.state_from_ket(&s, &ket(&[(0., 0.), (1., 0.)])).unwrap();
        let w = transitivity_witness(&b, &zero, &one).unwrap();
        assert!(w.replay_error < 1e-12);
        let x = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        assert!(w.channel.max_abs_diff(&b.transfer_from_kraus(&s, &s, &[x]).unwrap()) < 1e-12);
        let w = transitivity_witness(&b, &zero, &zero).unwrap();
        assert!(w.channel.max_abs_diff(&b.identity(&s).unwrap()) < 1e-12);

        let mut rng = random::rng(12);
        for _ in 0..20 {
            let u = b.state_from_ket(&s, &random::random_ket(&mut rng, 2, random::field_of(b.kind()))).unwrap();
            let v = b.state_from_ket(&s, &random::random_ket(&mut rng, 2, random::field_of(b.kind()))).unwrap();
            let w = transitivity_witness(&b, &u, &v).unwrap();
            assert!(w.replay_error <= 1e-10);
            let h = &w.unitary;
            assert!(max_abs_c(&(h.adjoint() * h - CMatrix::identity(2, 2))) < 1e-12);
        }

        let mixed = b.state_from_density(&s, &CMatrix::identity(2, 2).scale(0.5)).unwrap();
        assert_eq!(transitivity_witness(&b, &zero, &mixed).unwrap_err(), AuditError::NotPure);
    }

    #[test]
    fn classical_transitivity_and_uniqueness_use_permutations() {
        let b = TheoryBackend::classical().with_system("t", 3).unwrap();
        let s = SystemType::primitive("t");
        let e0 = b.state_from_probs(&s, &[1., 0., 0.]).unwrap();
        let e2 = b.state_from_probs(&s, &[0., 0., 1.]).unwrap();
        let w = transitivity_witness(&b, &e0, &e2).unwrap();
        assert_eq!(w.replay_error, 0.0);
        let ss = s.tensor(&s);
        let mut p1 = vec![0.0; 9];
        let mut p2 = vec![0.0; 9];
        p1[3] = 1.0; // (1, 0)
        p2[5] = 1.0; // (1, 2)
        let j1 = b.state_from_probs(&ss, &p1).unwrap();
        let j2 = b.state_from_probs(&ss, &p2).unwrap();
        assert!(purification_uniqueness(&b, &j1, &j2, &s).unwrap().is_connected());
    }
}
