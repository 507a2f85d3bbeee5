//! Structural evaluation of diagrams and closed test circuits.

use std::collections::HashMap;

use serde::ser::SerializeMap;
use serde::Serialize;
use thiserror::Error;

use crate::diagram::{validate, BoxSignatures, Diagram, Node, Outcome, OutcomeSpace, SystemType, Test, ValidationErrorKind};
use crate::linalg::max_abs_r;
use crate::theory::{Payload, TheoryBackend, TheoryError, TransferMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("type mismatch at {path}: {left} vs {right}")]
    TypeMismatch {
        path: String,
        left: SystemType,
        right: SystemType,
    },
    #[error("unknown box {name} at {path}")]
    UnknownBox { path: String, name: String },
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("test circuit is not scalar ({input} -> {output})")]
    NotScalar { input: SystemType, output: SystemType },
    #[error("outcome probabilities sum to {total}")]
    NormalizationViolation { total: f64 },
    #[error("probability of outcome {outcome} is {value}")]
    OutOfRange { outcome: String, value: f64 },
}

/// A backend together with the compiled boxes diagrams may refer to.
#[derive(Clone, Debug)]
pub struct Model {
    backend: TheoryBackend,
    boxes: HashMap<String, TransferMatrix>,
}

impl Model {
    pub fn new(backend: TheoryBackend) -> Self {
        Self {
            backend,
            boxes: HashMap::new(),
        }
    }

    pub fn backend(&self) -> &TheoryBackend {
        &self.backend
    }

    /// Registers an already compiled box and returns its diagram.
    pub fn insert_box(&mut self, name: impl Into<String>, t: TransferMatrix) -> Diagram {
        let name = name.into();
        let d = Diagram::primitive(name.clone(), t.input_type().clone(), t.output_type().clone());
        self.boxes.insert(name, t);
        d
    }

    /// Compiles a payload (rejecting non-physical ones) and registers it.
    pub fn add_payload(
        &mut self,
        name: impl Into<String>,
        input: &SystemType,
        output: &SystemType,
        payload: &Payload,
    ) -> Result<Diagram, TheoryError> {
        let t = self.backend.compile_box(input, output, payload)?;
        Ok(self.insert_box(name, t))
    }

    pub fn get_box(&self, name: &str) -> Option<&TransferMatrix> {
        self.boxes.get(name)
    }

    pub fn box_diagram(&self, name: &str) -> Option<Diagram> {
        self.boxes
            .get(name)
            .map(|t| Diagram::primitive(name, t.input_type().clone(), t.output_type().clone()))
    }

    pub fn box_names(&self) -> impl Iterator<Item = &str> {
        self.boxes.keys().map(String::as_str)
    }

    pub fn evaluate(&self, d: &Diagram) -> Result<TransferMatrix, EvalError> {
        evaluate(d, self)
    }

    /// Whether the branches of `t` sum to a deterministic transformation.
    pub fn is_complete(&self, t: &Test) -> Result<bool, EvalError> {
        let branches = evaluate_test(t, self)?;
        let sum = self.backend.sum(&branches)?;
        let lhs = self.backend.compose(&sum, &self.backend.trace_transfer(t.output_type())?)?;
        let rhs = self.backend.trace_transfer(t.input_type())?;
        Ok(max_abs_r(&(lhs.matrix() - rhs.matrix())) <= self.backend.tolerances().normalization)
    }
}

impl BoxSignatures for Model {
    fn signature(&self, name: &str) -> Option<(SystemType, SystemType)> {
        self.boxes
            .get(name)
            .map(|t| (t.input_type().clone(), t.output_type().clone()))
    }
}

type Memo = HashMap<Diagram, TransferMatrix>;

/// Evaluates a diagram: `Seq` is matrix product, `Par` the Kronecker product,
/// `Swap` a coordinate permutation.
pub fn evaluate(d: &Diagram, model: &Model) -> Result<TransferMatrix, EvalError> {
    let mut memo = Memo::new();
    evaluate_with(d, model, &mut memo)
}

fn check(d: &Diagram, model: &Model) -> Result<(), EvalError> {
    if let Some(e) = validate(d, model).into_iter().next() {
        return Err(match e.kind {
            ValidationErrorKind::TypeMismatch { left, right } => EvalError::TypeMismatch {
                path: e.path,
                left,
                right,
            },
            ValidationErrorKind::UnknownBox(name) => EvalError::UnknownBox { path: e.path, name },
            ValidationErrorKind::SignatureMismatch { declared, used, .. } => EvalError::TypeMismatch {
                path: e.path,
                left: declared.0.tensor(&declared.1),
                right: used.0.tensor(&used.1),
            },
        });
    }
    Ok(())
}

fn evaluate_with(d: &Diagram, model: &Model, memo: &mut Memo) -> Result<TransferMatrix, EvalError> {
    check(d, model)?;
    eval_node(d, model, memo)
}

fn eval_node(d: &Diagram, model: &Model, memo: &mut Memo) -> Result<TransferMatrix, EvalError> {
    if let Some(t) = memo.get(d) {
        return Ok(t.clone());
    }
    let b = &model.backend;
    let t = match d.node() {
        Node::Box { name, .. } => model.boxes[name].clone(),
        Node::Identity(a) => b.identity(a)?,
        Node::Swap(x, y) => b.swap(x, y)?,
        Node::Seq(d1, d2) => {
            let t1 = eval_node(d1, model, memo)?;
            let t2 = eval_node(d2, model, memo)?;
            b.compose(&t1, &t2)?
        }
        Node::Par(d1, d2) => {
            let t1 = eval_node(d1, model, memo)?;
            let t2 = eval_node(d2, model, memo)?;
            b.tensor(&t1, &t2)?
        }
    };
    if matches!(d.node(), Node::Seq(..) | Node::Par(..)) {
        memo.insert(d.clone(), t.clone());
    }
    Ok(t)
}

/// Evaluates every branch of a test, sharing subterm results.
pub fn evaluate_test(t: &Test, model: &Model) -> Result<Vec<TransferMatrix>, EvalError> {
    let mut memo = Memo::new();
    t.branches()
        .iter()
        .map(|d| evaluate_with(d, model, &mut memo))
        .collect()
}

/// Outcome probabilities of a closed test circuit, in outcome-space order.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    outcome_space: OutcomeSpace,
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn outcome_space(&self) -> &OutcomeSpace {
        &self.outcome_space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, label: &Outcome) -> Option<f64> {
        self.outcome_space.position(label).map(|i| self.probs[i])
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Outcome, f64)> {
        self.outcome_space.labels().iter().zip(self.probs.iter().copied())
    }

    /// Sums probabilities over the classes of `coarse`, keeping first-appearance order.
    pub fn coarse_grain<F: Fn(&Outcome) -> Outcome>(&self, coarse: F) -> OutcomeDistribution {
        let mut labels: Vec<Outcome> = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        for (l, p) in self.iter() {
            let key = coarse(l);
            match labels.iter().position(|k| *k == key) {
                Some(i) => probs[i] += p,
                None => {
                    labels.push(key);
                    probs.push(p);
                }
            }
        }
        OutcomeDistribution {
            outcome_space: OutcomeSpace::new(labels).expect("distinct by construction"),
            probs,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("distribution serializes")
    }
}

impl Serialize for OutcomeDistribution {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.probs.len()))?;
        for (l, p) in self.iter() {
            map.serialize_entry(&l.to_string(), &p)?;
        }
        map.end()
    }
}

/// `probs[x] = Prob(evaluate(t[x]))`. Fails if a probability leaves `[0, 1]` or
/// the total exceeds one.
pub fn run_test_circuit(t: &Test, model: &Model) -> Result<OutcomeDistribution, EvalError> {
    if !t.is_scalar() {
        return Err(EvalError::NotScalar {
            input: t.input_type().clone(),
            output: t.output_type().clone(),
        });
    }
    let values = evaluate_test(t, model)?;
    let mut probs = Vec::with_capacity(values.len());
    for (label, v) in t.outcome_space().labels().iter().zip(&values) {
        let p = model.backend.prob(v).map_err(|e| match e {
            TheoryError::OutOfRange { value } => EvalError::OutOfRange {
                outcome: label.to_string(),
                value,
            },
            other => EvalError::Theory(other),
        })?;
        probs.push(p);
    }
    let dist = OutcomeDistribution {
        outcome_space: t.outcome_space().clone(),
        probs,
    };
    let total = dist.total();
    if total > 1.0 + model.backend.tolerances().normalization {
        return Err(EvalError::NormalizationViolation { total });
    }
    Ok(dist)
}

/// As [`run_test_circuit`], for circuits built from complete tests: the total must be one.
pub fn run_complete_test_circuit(t: &Test, model: &Model) -> Result<OutcomeDistribution, EvalError> {
    let dist = run_test_circuit(t, model)?;
    let total = dist.total();
    if (total - 1.0).abs() > model.backend.tolerances().normalization {
        return Err(EvalError::NormalizationViolation { total });
    }
    Ok(dist)
}
