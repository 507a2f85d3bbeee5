use serde::Serialize;

use super::AuditError;
use crate::diagram::SystemType;
use crate::linalg::{max_abs_r, RMatrix};
use crate::theory::{EffectVector, StateVector, TheoryBackend, TransferMatrix};

/// A complete observation test `{a_x}` given by its effects.
#[derive(Clone, Debug)]
pub struct ObservationTest {
    pub name: String,
    pub effects: Vec<EffectVector>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CausalityReport {
    pub tests_checked: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    /// Ordered pairs `(A, B)` for which `Tr_{A⊗B} = Tr_A ⊗ Tr_B` was compared.
    pub product_rule_pairs: usize,
    pub product_rule_exact: bool,
}

/// Checks `Σ_x a_x = Tr` for every test, and the product rule of the trace on
/// every ordered pair of declared systems and test systems.
pub fn check_causality(backend: &TheoryBackend, tests: &[ObservationTest]) -> Result<CausalityReport, AuditError> {
    let tol = backend.tolerances().algebraic;
    let mut max_residual = 0.0f64;
    let mut systems: Vec<SystemType> = backend
        .declared_systems()
        .map(|(l, _)| SystemType::primitive(l))
        .collect();
    for t in tests {
        let first = t.effects.first().ok_or(AuditError::InvalidInput(format!("test {} has no branches", t.name)))?;
        let tr = backend.trace_effect(&first.system)?;
        let mut sum = tr.coords.map(|_| 0.0);
        for e in &t.effects {
            if e.system != first.system {
                return Err(AuditError::InvalidInput(format!("test {} mixes systems", t.name)));
            }
            sum += &e.coords;
        }
        let residual = (sum - &tr.coords).amax();
        if residual > tol {
            return Err(AuditError::CausalityViolation {
                test: t.name.clone(),
                residual,
            });
        }
        max_residual = max_residual.max(residual);
        if !systems.contains(&first.system) {
            systems.push(first.system.clone());
        }
    }
    let mut pairs = 0;
    for a in &systems {
        for b in &systems {
            let joint = backend.trace_transfer(&a.tensor(b))?;
            let prod = backend.tensor(&backend.trace_transfer(a)?, &backend.trace_transfer(b)?)?;
            pairs += 1;
            if joint.matrix() != prod.matrix() {
                return Err(AuditError::CausalityViolation {
                    test: format!("Tr_{{{}}}", a.tensor(b)),
                    residual: (joint.matrix() - prod.matrix()).amax(),
                });
            }
        }
    }
    Ok(CausalityReport {
        tests_checked: tests.len(),
        max_residual,
        tolerance: tol,
        product_rule_pairs: pairs,
        product_rule_exact: true,
    })
}

/// `Tr ∘ M = Tr` within the normalization tolerance.
pub fn is_deterministic(backend: &TheoryBackend, m: &TransferMatrix) -> Result<bool, AuditError> {
    Ok(determinism_residual(backend, m)? <= backend.tolerances().normalization)
}

pub(crate) fn determinism_residual(backend: &TheoryBackend, m: &TransferMatrix) -> Result<f64, AuditError> {
    let lhs = backend.compose(m, &backend.trace_transfer(m.output_type())?)?;
    let rhs = backend.trace_transfer(m.input_type())?;
    Ok(max_abs_r(&(lhs.matrix() - rhs.matrix())))
}

/// Discards the factors of `system` whose `keep` flag is false.
pub fn marginal_transfer(backend: &TheoryBackend, system: &SystemType, keep: &[bool]) -> Result<TransferMatrix, AuditError> {
    if keep.len() != system.len() {
        return Err(AuditError::InvalidInput(format!(
            "keep mask has {} entries for a word of length {}",
            keep.len(),
            system.len()
        )));
    }
    let mut full = RMatrix::from_element(1, 1, 1.0);
    let mut kept = Vec::new();
    for (label, &k) in system.labels().iter().zip(keep) {
        let s = SystemType::primitive(label.clone());
        let factor = if k {
            kept.push(label.clone());
            backend.identity(&s)?.full().clone()
        } else {
            backend.trace_transfer(&s)?.full().clone()
        };
        full = full.kronecker(&factor);
    }
    Ok(backend.transfer_from_full(system, &SystemType::from_labels(kept), full)?)
}

/// The marginal of `sigma` on the kept factors.
pub fn marginal(backend: &TheoryBackend, sigma: &StateVector, keep: &[bool]) -> Result<StateVector, AuditError> {
    let t = marginal_transfer(backend, &sigma.system, keep)?;
    Ok(backend.apply(&t, sigma)?)
}

/// Mask keeping the first `n` factors of `system`.
pub(crate) fn keep_prefix(system: &SystemType, n: usize) -> Vec<bool> {
    (0..system.len()).map(|i| i < n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs_c, CMatrix, CVector};
    use crate::random;

    fn q() -> (TheoryBackend, SystemType) {
        (TheoryBackend::quantum().with_system("q", 2).unwrap(), SystemType::primitive("q"))
    }

    #[test]
    fn povm_is_causal() {
        let (b, s) = q();
        let mut rng = random::rng(1);
        let povm = random::random_povm(&mut rng, 2, 3, random::field_of(b.kind()));
        let effects = povm.iter().map(|e| b.effect_from_operator(&s, e).unwrap()).collect();
        let rep = check_causality(&b, &[ObservationTest { name: "m".into(), effects }]).unwrap();
        assert!(rep.max_residual <= 1e-12);
        assert!(rep.product_rule_exact);
    }

    #[test]
    fn product_rule_on_rebits() {
        let b = TheoryBackend::quantum_real().with_system("r", 2).unwrap().with_system("t", 3).unwrap();
        let rep = check_causality(&b, &[]).unwrap();
        assert_eq!(rep.product_rule_pairs, 4);
        assert!(rep.product_rule_exact);
    }

    #[test]
    fn classical_readout_is_causal() {
        let b = TheoryBackend::classical().with_system("b", 2).unwrap();
        let s = SystemType::primitive("b");
        let effects = vec![
            EffectVector::new(s.clone(), nalgebra::DVector::from_vec(vec![1.0, 0.0])),
            EffectVector::new(s.clone(), nalgebra::DVector::from_vec(vec![0.0, 1.0])),
        ];
        assert!(check_causality(&b, &[ObservationTest { name: "read".into(), effects }]).is_ok());
    }

    #[test]
    fn subnormalized_test_violates() {
        let b = TheoryBackend::classical().with_system("b", 2).unwrap();
        let s = SystemType::primitive("b");
        let effects = vec![
            EffectVector::new(s.clone(), nalgebra::DVector::from_vec(vec![0.75, 0.0])),
            EffectVector::new(s.clone(), nalgebra::DVector::from_vec(vec![0.0, 1.0])),
        ];
        match check_causality(&b, &[ObservationTest { name: "leaky".into(), effects }]) {
            Err(AuditError::CausalityViolation { test, residual }) => {
                assert_eq!(test, "leaky");
                assert!((residual - 0.25).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn determinism() {
        let (b, s) = q();
        let mut rng = random::rng(3);
        let ks = random::random_channel(&mut rng, 2, 2, 2, random::field_of(b.kind()));
        let ch = b.transfer_from_kraus(&s, &s, &ks).unwrap();
        assert!(is_deterministic(&b, &ch).unwrap());
        let proj = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
        let branch = b.transfer_from_kraus(&s, &s, &[proj]).unwrap();
        assert!(!is_deterministic(&b, &branch).unwrap());
        assert!(is_deterministic(&b, &b.tensor(&ch, &ch).unwrap()).unwrap());
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let (b, s) = q();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let bell = CVector::from_vec(vec![c(r, 0.), c(0., 0.), c(0., 0.), c(r, 0.)]);
        let ss = s.tensor(&s);
        let sigma = b.state_from_ket(&ss, &bell).unwrap();
        let m = marginal(&b, &sigma, &[true, false]).unwrap();
        // oracle: numerical partial trace of the projector
        let oracle = crate::linalg::partial_trace(&(&bell * bell.adjoint()), &[2, 2], &[true, false]);
        assert!(max_abs_c(&(b.density(&m).unwrap() - &oracle)) < 1e-15);
        assert!(max_abs_c(&(oracle - CMatrix::identity(2, 2).scale(0.5))) < 1e-15);
    }

    #[test]
    fn product_and_classical_marginals() {
        let (b, s) = q();
        let mut rng = random::rng(4);
        let f = random::field_of(b.kind());
        let alpha = b.state_from_density(&s, &random::random_density(&mut rng, 2, 2, f)).unwrap();
        let beta = b.state_from_density(&s, &random::random_density(&mut rng, 2, 1, f)).unwrap();
        let joint = StateVector::new(s.tensor(&s), alpha.coords.kronecker(&beta.coords));
        let m = marginal(&b, &joint, &[true, false]).unwrap();
        assert!((m.coords - &alpha.coords).amax() < 1e-15);

        let cb = TheoryBackend::classical().with_system("b", 2).unwrap().with_system("t", 3).unwrap();
        let bt = SystemType::from_labels(["b", "t"]);
        let p = [0.1, 0.2, 0.05, 0.3, 0.15, 0.2];
        let sigma = cb.state_from_probs(&bt, &p).unwrap();
        let m = marginal(&cb, &sigma, &[true, false]).unwrap();
        assert!((m.coords[0] - 0.35).abs() < 1e-15 && (m.coords[1] - 0.65).abs() < 1e-15);
    }
}
