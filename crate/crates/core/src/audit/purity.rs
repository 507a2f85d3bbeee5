use serde::Serialize;

use super::causality::determinism_residual;
use super::{is_real_backend, AuditError};
use crate::linalg::eigh_in;
use crate::theory::{BackendKind, StateVector, TheoryBackend, TransferMatrix};

/// Whether a state is pure: rank at most one (operator backends) or at most
/// one nonzero entry (classical).
pub fn is_pure_state(backend: &TheoryBackend, rho: &StateVector) -> Result<bool, AuditError> {
    match backend.kind() {
        BackendKind::Classical => Ok(count_nonzero(rho.coords.iter(), backend.tolerances().physical) <= 1),
        _ => Ok(second_eigenvalue(backend, &backend.density(rho)?) < backend.tolerances().physical),
    }
}

/// Whether a transformation is pure, judged from its Choi rank (or support
/// size for stochastic matrices).
pub fn is_pure_transformation(backend: &TheoryBackend, m: &TransferMatrix) -> Result<bool, AuditError> {
    match backend.kind() {
        BackendKind::Classical => Ok(count_nonzero(m.matrix().iter(), backend.tolerances().physical) <= 1),
        _ => Ok(second_eigenvalue(backend, &backend.choi(m)?) < backend.tolerances().physical),
    }
}

fn count_nonzero<'a>(xs: impl Iterator<Item = &'a f64>, tol: f64) -> usize {
    xs.filter(|x| x.abs() > tol).count()
}

pub(crate) fn second_eigenvalue(backend: &TheoryBackend, op: &crate::linalg::CMatrix) -> f64 {
    let (vals, _) = eigh_in(op, is_real_backend(backend));
    vals.get(1).copied().unwrap_or(0.0)
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "verdict")]
pub enum Reversibility {
    Reversible { inverse: TransferMatrix },
    No { reason: String },
}

impl Reversibility {
    pub fn is_reversible(&self) -> bool {
        matches!(self, Reversibility::Reversible { .. })
    }

    pub fn inverse(&self) -> Option<&TransferMatrix> {
        match self {
            Reversibility::Reversible { inverse } => Some(inverse),
            Reversibility::No { .. } => None,
        }
    }
}

/// Inverts the transfer matrix and accepts when the inverse is itself a
/// physical deterministic transformation.
pub fn is_reversible(backend: &TheoryBackend, m: &TransferMatrix) -> Result<Reversibility, AuditError> {
    let full = m.full();
    if full.nrows() != full.ncols() {
        return Ok(Reversibility::No {
            reason: format!("transfer matrix is {}x{}", full.nrows(), full.ncols()),
        });
    }
    let Some(inv) = full.clone().try_inverse() else {
        return Ok(Reversibility::No {
            reason: "transfer matrix is singular".into(),
        });
    };
    let inverse = backend.transfer_from_full(m.output_type(), m.input_type(), inv)?;
    if let Some(v) = backend.is_physical(&inverse)?.violation() {
        return Ok(Reversibility::No {
            reason: format!("inverse violates {} ({} vs {})", v.condition, v.value, v.bound),
        });
    }
    let residual = determinism_residual(backend, &inverse)?;
    if residual > backend.tolerances().normalization {
        return Ok(Reversibility::No {
            reason: format!("inverse is not deterministic (residual {residual})"),
        });
    }
    Ok(Reversibility::Reversible { inverse })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::SystemType;
    use crate::linalg::{c, CMatrix, RMatrix};

    fn q() -> (TheoryBackend, SystemType) {
        (TheoryBackend::quantum().with_system("q", 2).unwrap(), SystemType::primitive("q"))
    }

    fn diag(a: f64, b: f64) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(a, 0.), c(0., 0.), c(0., 0.), c(b, 0.)])
    }

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
    }

    fn amplitude_damping(g: f64) -> Vec<CMatrix> {
        vec![
            CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c((1.0 - g).sqrt(), 0.)]),
            CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(g.sqrt(), 0.), c(0., 0.), c(0., 0.)]),
        ]
    }

    #[test]
    fn pure_and_mixed_states() {
        let (b, s) = q();
        assert!(is_pure_state(&b, &b.state_from_density(&s, &diag(1., 0.)).unwrap()).unwrap());
        assert!(!is_pure_state(&b, &b.state_from_density(&s, &diag(0.5, 0.5)).unwrap()).unwrap());
    }

    #[test]
    fn pure_and_mixed_channels() {
        let (b, s) = q();
        let u = b.transfer_from_kraus(&s, &s, &[pauli_x()]).unwrap();
        assert!(is_pure_transformation(&b, &u).unwrap());
        let dep = b.transfer_from_choi(&s, &s, &CMatrix::identity(4, 4).scale(0.5)).unwrap();
        assert!(!is_pure_transformation(&b, &dep).unwrap());
    }

    /// Enumerates splittings `N + N' = M` with entries of `N` on a grid in
    /// `[0, M_ij]` and reports whether one exists with `N` not proportional to `M`.
    fn classical_impurity_by_search(m: &RMatrix, steps: usize) -> bool {
        let cells: Vec<(usize, usize)> = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| (i, j))).collect();
        let total = (steps + 1).pow(cells.len() as u32);
        (0..total).any(|mut code| {
            let mut n = RMatrix::zeros(m.nrows(), m.ncols());
            for &(i, j) in &cells {
                n[(i, j)] = m[(i, j)] * (code % (steps + 1)) as f64 / steps as f64;
                code /= steps + 1;
            }
            let lambda = n.sum() / m.sum();
            (n - m * lambda).amax() > 1e-12
        })
    }

    #[test]
    fn classical_purity_agrees_with_decomposition_search() {
        let b = TheoryBackend::classical().with_system("b", 2).unwrap();
        let s = SystemType::primitive("b");
        let candidates = [
            RMatrix::identity(2, 2),
            RMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.]),
            RMatrix::from_row_slice(2, 2, &[1., 0., 0., 0.]),
            RMatrix::from_row_slice(2, 2, &[0., 0., 0.5, 0.]),
            RMatrix::from_row_slice(2, 2, &[1., 1., 0., 0.]),
        ];
        for m in candidates {
            let t = b.transfer_from_full(&s, &s, m.clone()).unwrap();
            let pure = is_pure_transformation(&b, &t).unwrap();
            assert_eq!(pure, !classical_impurity_by_search(&m, 4), "{m}");
        }
        assert!(!is_pure_transformation(&b, &b.identity(&s).unwrap()).unwrap());
    }

    /// Grid search over real PSD `A ≤ ρ`; finds a non-proportional summand iff `ρ` is mixed.
    fn quantum_impurity_by_search(rho: &CMatrix, steps: usize) -> bool {
        let g = |k: usize| k as f64 / steps as f64;
        for i in 0..=steps {
            for j in 0..=steps {
                for k in 0..=(2 * steps) {
                    let off = g(k) - 1.0;
                    let a = CMatrix::from_row_slice(2, 2, &[c(g(i), 0.), c(off, 0.), c(off, 0.), c(g(j), 0.)]);
                    let rest = rho - &a;
                    let psd = |m: &CMatrix| crate::linalg::min_eigenvalue(m) >= -1e-12;
                    if psd(&a) && psd(&rest) {
                        let lambda = crate::linalg::trace(&a).re;
                        if crate::linalg::max_abs_c(&(&a - rho.scale(lambda))) > 1e-12 {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    #[test]
    fn quantum_purity_agrees_with_decomposition_search() {
        let (b, s) = q();
        let plus = CMatrix::from_element(2, 2, c(0.5, 0.));
        for rho in [diag(1., 0.), diag(0., 1.), plus, diag(0.5, 0.5), diag(0.75, 0.25)] {
            let st = b.state_from_density(&s, &rho).unwrap();
            assert_eq!(is_pure_state(&b, &st).unwrap(), !quantum_impurity_by_search(&rho, 4), "{rho}");
        }
    }

    #[test]
    fn classical_states() {
        let b = TheoryBackend::classical().with_system("t", 3).unwrap();
        let s = SystemType::primitive("t");
        assert!(is_pure_state(&b, &b.state_from_probs(&s, &[0., 1., 0.]).unwrap()).unwrap());
        assert!(!is_pure_state(&b, &b.state_from_probs(&s, &[0.5, 0.5, 0.]).unwrap()).unwrap());
    }

    #[test]
    fn reversibility() {
        let (b, s) = q();
        let x = b.transfer_from_kraus(&s, &s, &[pauli_x()]).unwrap();
        let r = is_reversible(&b, &x).unwrap();
        assert!(r.inverse().unwrap().max_abs_diff(&x) < 1e-12);

        let ad = b.transfer_from_kraus(&s, &s, &amplitude_damping(0.5)).unwrap();
        match is_reversible(&b, &ad).unwrap() {
            Reversibility::No { reason } => assert!(reason.contains("choi-positivity"), "{reason}"),
            other => panic!("{other:?}"),
        }

        let cb = TheoryBackend::classical().with_system("b", 2).unwrap();
        let cs = SystemType::primitive("b");
        let flip = cb.transfer_from_full(&cs, &cs, RMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.])).unwrap();
        assert!(is_reversible(&cb, &flip).unwrap().is_reversible());
        let noisy = cb.transfer_from_full(&cs, &cs, RMatrix::from_row_slice(2, 2, &[0.8, 0.3, 0.2, 0.7])).unwrap();
        match is_reversible(&cb, &noisy).unwrap() {
            Reversibility::No { reason } => assert!(reason.contains("nonnegativity"), "{reason}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn real_rotation_is_reversible() {
        let b = TheoryBackend::quantum_real().with_system("r", 2).unwrap();
        let s = SystemType::primitive("r");
        let (ct, st) = (0.6f64, 0.8f64);
        let rot = CMatrix::from_row_slice(2, 2, &[c(ct, 0.), c(-st, 0.), c(st, 0.), c(ct, 0.)]);
        let t = b.transfer_from_kraus(&s, &s, &[rot.clone()]).unwrap();
        let inv = is_reversible(&b, &t).unwrap();
        let back = b.transfer_from_kraus(&s, &s, &[rot.transpose()]).unwrap();
        assert!(inv.inverse().unwrap().max_abs_diff(&back) < 1e-12);
        assert!(is_pure_transformation(&b, &t).unwrap());
    }
}
