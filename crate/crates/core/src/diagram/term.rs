use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::{DiagramError, SystemType};

/// Term constructors of the circuit language.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Box {
        name: String,
        input: SystemType,
        output: SystemType,
    },
    Identity(SystemType),
    /// `A ⊗ B → B ⊗ A`.
    Swap(SystemType, SystemType),
    Seq(Diagram, Diagram),
    Par(Diagram, Diagram),
}

/// An immutable typed circuit term. Cloning is cheap; subterms are shared.
///
/// Equality is syntactic. Equality of the transformations two diagrams denote
/// is decided by evaluation, see [`crate::tomography::equivalent`].
#[derive(Clone)]
pub struct Diagram {
    node: Arc<Node>,
    input: SystemType,
    output: SystemType,
    hash: u64,
}

impl Diagram {
    fn from_node(node: Node) -> Self {
        let (input, output) = match &node {
            Node::Box { input, output, .. } => (input.clone(), output.clone()),
            Node::Identity(a) => (a.clone(), a.clone()),
            Node::Swap(a, b) => (a.tensor(b), b.tensor(a)),
            Node::Seq(d1, d2) => (d1.input.clone(), d2.output.clone()),
            Node::Par(d1, d2) => (d1.input.tensor(&d2.input), d1.output.tensor(&d2.output)),
        };
        let mut h = DefaultHasher::new();
        node.hash(&mut h);
        Diagram {
            node: Arc::new(node),
            input,
            output,
            hash: h.finish(),
        }
    }

    pub fn primitive(name: impl Into<String>, input: SystemType, output: SystemType) -> Self {
        Self::from_node(Node::Box {
            name: name.into(),
            input,
            output,
        })
    }

    pub fn identity(system: SystemType) -> Self {
        Self::from_node(Node::Identity(system))
    }

    pub fn swap(a: SystemType, b: SystemType) -> Self {
        Self::from_node(Node::Swap(a, b))
    }

    /// `d2 ∘ d1`.
    pub fn seq(d1: &Diagram, d2: &Diagram) -> Result<Self, DiagramError> {
        if d1.output != d2.input {
            return Err(DiagramError::TypeMismatch {
                left: d1.output.clone(),
                right: d2.input.clone(),
            });
        }
        Ok(Self::seq_unchecked(d1, d2))
    }

    /// Builds a `Seq` node without the wire check; [`super::validate`] reports the mismatch.
    pub fn seq_unchecked(d1: &Diagram, d2: &Diagram) -> Self {
        Self::from_node(Node::Seq(d1.clone(), d2.clone()))
    }

    pub fn par(d1: &Diagram, d2: &Diagram) -> Self {
        Self::from_node(Node::Par(d1.clone(), d2.clone()))
    }

    pub fn node(&self) -> &Node {
        &self.node
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

    pub fn is_state(&self) -> bool {
        self.input.is_unit()
    }

    pub fn is_effect(&self) -> bool {
        self.output.is_unit()
    }

    /// Number of constructor nodes.
    pub fn size(&self) -> usize {
        match &*self.node {
            Node::Seq(a, b) | Node::Par(a, b) => 1 + a.size() + b.size(),
            _ => 1,
        }
    }

    pub fn depth(&self) -> usize {
        match &*self.node {
            Node::Seq(a, b) | Node::Par(a, b) => 1 + a.depth().max(b.depth()),
            _ => 0,
        }
    }

    /// Structural hash, computed once at construction.
    pub fn structural_hash(&self) -> u64 {
        self.hash
    }
}

impl PartialEq for Diagram {
    fn eq(&self, other: &Self) -> bool {
        self.hash == other.hash && (Arc::ptr_eq(&self.node, &other.node) || self.node == other.node)
    }
}

impl Eq for Diagram {}

impl Hash for Diagram {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.hash);
    }
}

impl fmt::Debug for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Diagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.node {
            Node::Box { name, .. } => f.write_str(name),
            Node::Identity(a) => write!(f, "id({a})"),
            Node::Swap(a, b) => write!(f, "swap({a}, {b})"),
            Node::Seq(a, b) => write!(f, "({a} ; {b})"),
            Node::Par(a, b) => write!(f, "({a} * {b})"),
        }
    }
}

/// Free-function form of [`Diagram::seq`].
pub fn seq(d1: &Diagram, d2: &Diagram) -> Result<Diagram, DiagramError> {
    Diagram::seq(d1, d2)
}

/// Free-function form of [`Diagram::par`].
pub fn par(d1: &Diagram, d2: &Diagram) -> Diagram {
    Diagram::par(d1, d2)
}
