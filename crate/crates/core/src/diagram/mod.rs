//! The symmetric monoidal circuit IR: systems, diagrams, outcome spaces and tests.
//!
//! Nothing here knows about numbers. Types are tensor words and composites are
//! typed structurally; a backend gives them meaning in [`crate::eval`].

mod outcome;
mod system;
mod term;
mod test;

use thiserror::Error;

pub use outcome::{Outcome, OutcomeSpace};
pub use system::{tensor_systems, SystemType};
pub use term::{par, seq, Diagram, Node};
pub use test::{test_par, test_seq, Test};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagramError {
    #[error("type mismatch: {left} does not match {right}")]
    TypeMismatch { left: SystemType, right: SystemType },
    #[error("duplicate outcome label {0}")]
    DuplicateOutcome(String),
    #[error("outcome space is empty")]
    EmptyOutcomeSpace,
    #[error("expected {expected} branches, found {found}")]
    BranchCount { expected: usize, found: usize },
    #[error("branch {outcome} has a different type from the first branch")]
    BranchType { outcome: String },
}

/// Source of declared box signatures for [`validate`].
pub trait BoxSignatures {
    fn signature(&self, name: &str) -> Option<(SystemType, SystemType)>;
}

impl<S: std::hash::BuildHasher> BoxSignatures
    for std::collections::HashMap<String, (SystemType, SystemType), S>
{
    fn signature(&self, name: &str) -> Option<(SystemType, SystemType)> {
        self.get(name).cloned()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationErrorKind {
    TypeMismatch { left: SystemType, right: SystemType },
    UnknownBox(String),
    /// The box is declared with a different signature.
    SignatureMismatch {
        name: String,
        declared: (SystemType, SystemType),
        used: (SystemType, SystemType),
    },
}

/// A type error located by its path from the root, e.g. `seq.0/par.1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub path: String,
    pub kind: ValidationErrorKind,
}

/// Collects every ill-typed `Seq` node and every undeclared box. Empty means well-typed.
pub fn validate(d: &Diagram, boxes: &dyn BoxSignatures) -> Vec<ValidationError> {
    let mut errors = Vec::new();
    validate_into(d, boxes, "root", &mut errors);
    errors
}

fn validate_into(d: &Diagram, boxes: &dyn BoxSignatures, path: &str, out: &mut Vec<ValidationError>) {
    match d.node() {
        Node::Box { name, input, output } => match boxes.signature(name) {
            None => out.push(ValidationError {
                path: path.to_string(),
                kind: ValidationErrorKind::UnknownBox(name.clone()),
            }),
            Some(sig) if sig.0 != *input || sig.1 != *output => out.push(ValidationError {
                path: path.to_string(),
                kind: ValidationErrorKind::SignatureMismatch {
                    name: name.clone(),
                    declared: sig,
                    used: (input.clone(), output.clone()),
                },
            }),
            Some(_) => {}
        },
        Node::Identity(_) | Node::Swap(..) => {}
        Node::Seq(a, b) => {
            if a.output_type() != b.input_type() {
                out.push(ValidationError {
                    path: path.to_string(),
                    kind: ValidationErrorKind::TypeMismatch {
                        left: a.output_type().clone(),
                        right: b.input_type().clone(),
                    },
                });
            }
            validate_into(a, boxes, &format!("{path}/seq.0"), out);
            validate_into(b, boxes, &format!("{path}/seq.1"), out);
        }
        Node::Par(a, b) => {
            validate_into(a, boxes, &format!("{path}/par.0"), out);
            validate_into(b, boxes, &format!("{path}/par.1"), out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn s(l: &str) -> SystemType {
        SystemType::primitive(l)
    }

    fn catalog() -> HashMap<String, (SystemType, SystemType)> {
        let mut m = HashMap::new();
        m.insert("rho".to_string(), (SystemType::unit(), s("A")));
        m.insert("a".to_string(), (s("A"), SystemType::unit()));
        m.insert("b".to_string(), (s("B"), SystemType::unit()));
        m
    }

    #[test]
    fn well_typed_is_clean() {
        let d = Diagram::seq(
            &Diagram::primitive("rho", SystemType::unit(), s("A")),
            &Diagram::primitive("a", s("A"), SystemType::unit()),
        )
        .unwrap();
        assert!(validate(&d, &catalog()).is_empty());
    }

    #[test]
    fn mismatch_is_reported_at_node() {
        let d = Diagram::seq_unchecked(
            &Diagram::primitive("rho", SystemType::unit(), s("A")),
            &Diagram::primitive("b", s("B"), SystemType::unit()),
        );
        let errs = validate(&d, &catalog());
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].path, "root");
        assert!(matches!(errs[0].kind, ValidationErrorKind::TypeMismatch { .. }));
    }

    #[test]
    fn unknown_box_reported() {
        let d = Diagram::par(
            &Diagram::identity(s("A")),
            &Diagram::primitive("ghost", s("A"), s("A")),
        );
        let errs = validate(&d, &catalog());
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].path, "root/par.1");
        assert_eq!(errs[0].kind, ValidationErrorKind::UnknownBox("ghost".into()));
    }
}
