//! Operational equivalence of transformations, local tomography, and faithful states.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::audit::purify_state;
use crate::diagram::{Diagram, SystemType};
use crate::eval::{EvalError, Model};
use crate::linalg::{c, eigh, matrix_rank, CMatrix, RMatrix};
use crate::random;
use crate::theory::{BackendKind, StateVector, TheoryBackend, TheoryError, TransferMatrix};

/// Reference systems `R` against which `M ⊗ I_R` is compared.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefPolicy {
    pub systems: Vec<SystemType>,
}

impl RefPolicy {
    pub fn new(systems: Vec<SystemType>) -> Self {
        Self { systems }
    }

    /// Only the unit system: equality of the bare transfer matrices.
    pub fn trivial() -> Self {
        Self::new(vec![SystemType::unit()])
    }

    /// `{I}` together with every declared primitive system.
    pub fn default_for(backend: &TheoryBackend) -> Self {
        let mut systems = vec![SystemType::unit()];
        systems.extend(backend.declared_systems().map(|(l, _)| SystemType::primitive(l)));
        Self::new(systems)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Equivalent,
    Distinguished,
}

/// A state on `A ⊗ R` and an effect on `B ⊗ R` whose probabilities differ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistinguishingWitness {
    pub reference: SystemType,
    pub state: StateVector,
    pub effect: crate::theory::EffectVector,
    pub probabilities: [f64; 2],
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub verdict: Verdict,
    pub witness: Option<DistinguishingWitness>,
    pub tolerance: f64,
    pub references: Vec<SystemType>,
}

impl EquivalenceReport {
    pub fn is_equivalent(&self) -> bool {
        self.verdict == Verdict::Equivalent
    }
}

/// Evaluates both diagrams and compares them with [`equivalent_transfers`].
pub fn equivalent(m: &Diagram, m2: &Diagram, model: &Model, policy: &RefPolicy) -> Result<EquivalenceReport, EvalError> {
    let t = model.evaluate(m)?;
    let t2 = model.evaluate(m2)?;
    Ok(equivalent_transfers(model.backend(), &t, &t2, policy)?)
}

/// Compares `M ⊗ I_R` and `M2 ⊗ I_R` on spanning states of `A ⊗ R` and spanning
/// effects of `B ⊗ R` for every `R` of the policy, in order. The first pair with
/// a probability gap above the physical tolerance is returned as the witness.
pub fn equivalent_transfers(
    backend: &TheoryBackend,
    t: &TransferMatrix,
    t2: &TransferMatrix,
    policy: &RefPolicy,
) -> Result<EquivalenceReport, TheoryError> {
    if t.input_type() != t2.input_type() || t.output_type() != t2.output_type() {
        return Err(TheoryError::TypeMismatch {
            left: t.input_type().clone(),
            right: t2.input_type().clone(),
        });
    }
    let tol = backend.tolerances().physical;
    for r in &policy.systems {
        let id = backend.identity(r)?;
        let e1 = backend.tensor(t, &id)?;
        let e2 = backend.tensor(t2, &id)?;
        let states = backend.spanning_states(&t.input_type().tensor(r))?;
        let effects = backend.spanning_effects(&t.output_type().tensor(r))?;
        for s in &states {
            let (o1, o2) = (e1.matrix() * &s.coords, e2.matrix() * &s.coords);
            for e in &effects {
                let (p1, p2) = (e.coords.dot(&o1), e.coords.dot(&o2));
                let gap = (p1 - p2).abs();
                if gap > tol {
                    return Ok(EquivalenceReport {
                        verdict: Verdict::Distinguished,
                        witness: Some(DistinguishingWitness {
                            reference: r.clone(),
                            state: s.clone(),
                            effect: e.clone(),
                            probabilities: [p1, p2],
                            gap,
                        }),
                        tolerance: tol,
                        references: policy.systems.clone(),
                    });
                }
            }
        }
    }
    Ok(EquivalenceReport {
        verdict: Verdict::Equivalent,
        witness: None,
        tolerance: tol,
        references: policy.systems.clone(),
    })
}

/// Replays a witness through the backend: `(a, (M ⊗ I_R) σ)`.
pub fn witness_probability(backend: &TheoryBackend, t: &TransferMatrix, w: &DistinguishingWitness) -> Result<f64, TheoryError> {
    let ext = backend.tensor(t, &backend.identity(&w.reference)?)?;
    let circuit = backend.compose(&backend.compose(&backend.state_transfer(&w.state)?, &ext)?, &backend.effect_transfer(&w.effect)?)?;
    Ok(circuit.scalar_value().expect("closed circuit"))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict")]
pub enum LocalTomography {
    Holds { dim_product: usize, dim_joint: usize },
    Fails { dim_product: usize, dim_joint: usize },
}

impl LocalTomography {
    pub fn holds(&self) -> bool {
        matches!(self, LocalTomography::Holds { .. })
    }
}

/// Whether products of local states span the joint state space of `A ⊗ B`.
/// `dim_product` is the rank of the product set inside `St_R(A ⊗ B)`.
pub fn local_tomography_check(backend: &TheoryBackend, a: &SystemType, b: &SystemType) -> Result<LocalTomography, TheoryError> {
    let ab = a.tensor(b);
    let dim_joint = backend.state_dim(&ab)?;
    let sa = backend.spanning_states(a)?;
    let sb = backend.spanning_states(b)?;
    let mut cols = Vec::with_capacity(sa.len() * sb.len());
    for x in &sa {
        let fx = backend.embed(a, &x.coords)?;
        for y in &sb {
            let full = fx.kronecker(&backend.embed(b, &y.coords)?);
            cols.push(backend.restrict_vec(&ab, &full)?);
        }
    }
    let m = RMatrix::from_columns(&cols);
    let dim_product = matrix_rank(&m);
    let local = backend.state_dim(a)? * backend.state_dim(b)?;
    Ok(if local == dim_joint && dim_product == dim_joint {
        LocalTomography::Holds { dim_product, dim_joint }
    } else {
        LocalTomography::Fails { dim_product, dim_joint }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FaithfulCertificate {
    /// Smallest eigenvalue (or probability).
    pub min_eigenvalue: f64,
    pub support: usize,
    pub dimension: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FaithfulState {
    pub state: StateVector,
    pub system: SystemType,
    pub certificate: FaithfulCertificate,
}

/// The maximally mixed (uniform) state with its interior certificate.
pub fn faithful_state(backend: &TheoryBackend, a: &SystemType) -> Result<FaithfulState, TheoryError> {
    let d = backend.total_dim(a)?;
    let state = match backend.kind() {
        BackendKind::Classical => StateVector::new(a.clone(), DVector::from_element(d, 1.0 / d as f64)),
        _ => backend.state_from_density(a, &CMatrix::from_diagonal_element(d, d, c(1.0 / d as f64, 0.0)))?,
    };
    let certificate = interior_certificate(backend, &state)?;
    Ok(FaithfulState {
        state,
        system: a.clone(),
        certificate,
    })
}

pub fn interior_certificate(backend: &TheoryBackend, state: &StateVector) -> Result<FaithfulCertificate, TheoryError> {
    let values: Vec<f64> = match backend.kind() {
        BackendKind::Classical => state.coords.iter().copied().collect(),
        _ => eigh(&backend.density(state)?).0,
    };
    let tol = backend.tolerances().physical;
    Ok(FaithfulCertificate {
        min_eigenvalue: values.iter().copied().fold(f64::INFINITY, f64::min),
        support: values.iter().filter(|&&v| v > tol).count(),
        dimension: values.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FaithfulnessReport {
    pub system: SystemType,
    /// `purification` (operator backends) or `copy` (classical).
    pub extension: &'static str,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Trials whose pair was distinguished by the reference policy.
    pub distinct_pairs: usize,
    /// Of those, the trials the extension failed to distinguish.
    pub undetected: Vec<usize>,
    /// Trials the extension distinguished although the policy found the pair equivalent.
    pub spurious: Vec<usize>,
    /// Largest extension gap for `M = M′` (must not exceed the tolerance).
    pub max_identical_gap: f64,
    pub min_extension_gap: f64,
    pub holds: bool,
}

/// The canonical extension of `omega`: a purification in the operator backends,
/// the perfectly correlated copy `Σ ω_i e_i ⊗ e_i` classically.
pub fn canonical_extension(backend: &TheoryBackend, omega: &FaithfulState) -> Result<StateVector, TheoryError> {
    match backend.kind() {
        BackendKind::Classical => {
            let d = omega.state.coords.len();
            let mut v = DVector::zeros(d * d);
            for i in 0..d {
                v[i * d + i] = omega.state.coords[i];
            }
            Ok(StateVector::new(omega.system.tensor(&TheoryBackend::ancilla(d)), v))
        }
        _ => match purify_state(backend, &omega.state) {
            Ok(p) => Ok(p.pure_state),
            Err(crate::audit::AuditError::Theory(e)) => Err(e),
            Err(e) => Err(TheoryError::Unsupported {
                backend: backend.name(),
                what: if matches!(e, crate::audit::AuditError::InvalidInput(_)) {
                    "extension of a non-normalized state"
                } else {
                    "canonical extension"
                },
            }),
        },
    }
}

fn random_map(backend: &TheoryBackend, a: &SystemType, rng: &mut random::AuditRng) -> Result<TransferMatrix, TheoryError> {
    use rand::Rng;
    let d = backend.total_dim(a)?;
    match backend.kind() {
        BackendKind::Classical => backend.transfer_from_full(a, a, random::random_stochastic(rng, d, d)),
        kind => {
            let n = rng.random_range(1..=d);
            let ks = random::random_channel(rng, d, d, n, random::field_of(kind));
            backend.transfer_from_kraus(a, a, &ks)
        }
    }
}

/// For `trials` random pairs of deterministic transformations on the faithful
/// state's system, checks that the canonical extension of `omega` separates
/// exactly the pairs the default reference policy separates.
pub fn verify_faithfulness(
    backend: &TheoryBackend,
    omega: &FaithfulState,
    trials: usize,
    seed: u64,
) -> Result<FaithfulnessReport, TheoryError> {
    let sigma = canonical_extension(backend, omega)?;
    let r = sigma.system.slice(omega.system.len(), sigma.system.len());
    let policy = RefPolicy::default_for(backend);
    let tol = backend.tolerances().physical;
    let a = &omega.system;
    let id_r = backend.identity(&r)?;
    let image = |t: &TransferMatrix| -> Result<DVector<f64>, TheoryError> {
        Ok(backend.apply(&backend.tensor(t, &id_r)?, &sigma)?.coords)
    };
    let outcomes: Vec<(bool, f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = random::rng(random::derive_seed(seed, k as u64));
            let m = random_map(backend, a, &mut rng)?;
            let m2 = if k % 10 == 9 {
                // now and then a pair that only differs by rounding
                backend.transfer_from_full(a, a, m.full().clone())?
            } else {
                random_map(backend, a, &mut rng)?
            };
            let distinct = !equivalent_transfers(backend, &m, &m2, &policy)?.is_equivalent();
            let im = image(&m)?;
            let gap = (&im - image(&m2)?).amax();
            let identical = (&im - image(&m)?).amax();
            Ok((distinct, gap, identical))
        })
        .collect::<Result<_, TheoryError>>()?;
    let mut report = FaithfulnessReport {
        system: a.clone(),
        extension: if backend.kind() == BackendKind::Classical { "copy" } else { "purification" },
        trials,
        seed,
        tolerance: tol,
        distinct_pairs: 0,
        undetected: Vec::new(),
        spurious: Vec::new(),
        max_identical_gap: 0.0,
        min_extension_gap: f64::INFINITY,
        holds: true,
    };
    for (k, (distinct, gap, identical)) in outcomes.into_iter().enumerate() {
        report.max_identical_gap = report.max_identical_gap.max(identical);
        if distinct {
            report.distinct_pairs += 1;
            report.min_extension_gap = report.min_extension_gap.min(gap);
            if gap <= tol {
                report.undetected.push(k);
            }
        } else if gap > tol {
            report.spurious.push(k);
        }
    }
    if report.distinct_pairs == 0 {
        report.min_extension_gap = 0.0;
    }
    report.holds = report.undetected.is_empty() && report.spurious.is_empty() && report.max_identical_gap <= tol;
    Ok(report)
}
