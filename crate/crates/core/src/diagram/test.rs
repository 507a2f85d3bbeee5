use super::{Diagram, DiagramError, Outcome, OutcomeSpace, SystemType};

/// An outcome-indexed family of diagrams sharing one type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Test {
    outcome_space: OutcomeSpace,
    branches: Vec<Diagram>,
    input: SystemType,
    output: SystemType,
}

impl Test {
    /// `branches[i]` is the branch for `outcome_space.labels()[i]`.
    pub fn new(outcome_space: OutcomeSpace, branches: Vec<Diagram>) -> Result<Self, DiagramError> {
        if branches.len() != outcome_space.len() {
            return Err(DiagramError::BranchCount {
                expected: outcome_space.len(),
                found: branches.len(),
            });
        }
        let input = branches[0].input_type().clone();
        let output = branches[0].output_type().clone();
        for (label, b) in outcome_space.labels().iter().zip(&branches) {
            if b.input_type() != &input || b.output_type() != &output {
                return Err(DiagramError::BranchType {
                    outcome: label.to_string(),
                });
            }
        }
        Ok(Self {
            outcome_space,
            branches,
            input,
            output,
        })
    }

    /// A deterministic test `{d}` with outcome space `{ε}`.
    pub fn singleton(d: Diagram) -> Self {
        Self {
            outcome_space: OutcomeSpace::singleton(),
            input: d.input_type().clone(),
            output: d.output_type().clone(),
            branches: vec![d],
        }
    }

    /// The identity test `{I_A}`.
    pub fn identity(system: SystemType) -> Self {
        Self::singleton(Diagram::identity(system))
    }

    pub fn outcome_space(&self) -> &OutcomeSpace {
        &self.outcome_space
    }

    pub fn branches(&self) -> &[Diagram] {
        &self.branches
    }

    pub fn branch(&self, label: &Outcome) -> Option<&Diagram> {
        self.outcome_space.position(label).map(|i| &self.branches[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Outcome, &Diagram)> {
        self.outcome_space.labels().iter().zip(&self.branches)
    }

    pub fn input_type(&self) -> &SystemType {
        &self.input
    }

    pub fn output_type(&self) -> &SystemType {
        &self.output
    }

    pub fn is_scalar(&self) -> bool {
        self.input.is_unit() && self.output.is_unit()
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }
}

/// Sequential composition: branch `(x, y)` is `t2[y] ∘ t1[x]`.
pub fn test_seq(t1: &Test, t2: &Test) -> Result<Test, DiagramError> {
    if t1.output != t2.input {
        return Err(DiagramError::TypeMismatch {
            left: t1.output.clone(),
            right: t2.input.clone(),
        });
    }
    let branches = t1
        .outcome_space
        .product_indices(&t2.outcome_space)
        .into_iter()
        .map(|(i, j)| Diagram::seq_unchecked(&t1.branches[i], &t2.branches[j]))
        .collect();
    Ok(Test {
        outcome_space: t1.outcome_space.product(&t2.outcome_space),
        branches,
        input: t1.input.clone(),
        output: t2.output.clone(),
    })
}

/// Parallel composition: branch `(x, y)` is `t1[x] ⊗ t2[y]`.
pub fn test_par(t1: &Test, t2: &Test) -> Test {
    let branches = t1
        .outcome_space
        .product_indices(&t2.outcome_space)
        .into_iter()
        .map(|(i, j)| Diagram::par(&t1.branches[i], &t2.branches[j]))
        .collect();
    Test {
        outcome_space: t1.outcome_space.product(&t2.outcome_space),
        branches,
        input: t1.input.tensor(&t2.input),
        output: t1.output.tensor(&t2.output),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(l: &str) -> SystemType {
        SystemType::primitive(l)
    }

    fn test_on(name: &str, input: SystemType, output: SystemType, labels: &[&str]) -> Test {
        let space = OutcomeSpace::from_atoms(labels.iter().copied()).unwrap();
        let branches = labels
            .iter()
            .map(|l| Diagram::primitive(format!("{name}[{l}]"), input.clone(), output.clone()))
            .collect();
        Test::new(space, branches).unwrap()
    }

    #[test]
    fn seq_indexes_by_product() {
        let m = test_on("M", s("A"), s("B"), &["0", "1"]);
        let n = test_on("N", s("B"), s("C"), &["a", "b"]);
        let t = test_seq(&m, &n).unwrap();
        assert_eq!(t.len(), 4);
        let keys: Vec<String> = t.outcome_space().labels().iter().map(|l| l.to_string()).collect();
        assert_eq!(keys, ["(0,a)", "(0,b)", "(1,a)", "(1,b)"]);
        let b = t.branch(&Outcome::pair(Outcome::atom("1"), Outcome::atom("a"))).unwrap();
        assert_eq!(b.to_string(), "(M[1] ; N[a])");
    }

    #[test]
    fn seq_with_identity_keeps_outcomes() {
        let m = test_on("M", s("A"), s("A"), &["0", "1"]);
        let t = test_seq(&m, &Test::identity(s("A"))).unwrap();
        assert_eq!(t.outcome_space(), m.outcome_space());
    }

    #[test]
    fn singletons_compose_to_singleton() {
        let a = Test::singleton(Diagram::primitive("a", s("A"), s("A")));
        let b = Test::singleton(Diagram::primitive("b", s("A"), s("A")));
        let t = test_seq(&a, &b).unwrap();
        assert!(t.outcome_space().is_singleton_epsilon());
        assert!(test_par(&a, &b).outcome_space().is_singleton_epsilon());
    }

    #[test]
    fn par_product_cardinality() {
        let m = test_on("M", s("A"), s("A"), &["0", "1"]);
        let n = test_on("N", s("B"), s("B"), &["0", "1", "2"]);
        let t = test_par(&m, &n);
        assert_eq!(t.len(), 6);
        assert_eq!(t.input_type(), &SystemType::from_labels(["A", "B"]));
    }

    #[test]
    fn par_with_identity_tensors_branches() {
        let m = test_on("M", s("A"), s("A"), &["0", "1"]);
        let t = test_par(&m, &Test::identity(s("B")));
        assert_eq!(t.outcome_space(), m.outcome_space());
        for (b, orig) in t.branches().iter().zip(m.branches()) {
            assert_eq!(b, &Diagram::par(orig, &Diagram::identity(s("B"))));
        }
    }

    #[test]
    fn mismatched_branch_types_rejected() {
        let space = OutcomeSpace::from_atoms(["0", "1"]).unwrap();
        let r = Test::new(
            space,
            vec![
                Diagram::primitive("x", s("A"), s("A")),
                Diagram::primitive("y", s("A"), s("B")),
            ],
        );
        assert!(matches!(r, Err(DiagramError::BranchType { .. })));
    }
}
