use std::collections::HashSet;
use std::fmt;

use super::DiagramError;

/// An outcome label: atomic, or a tuple of labels. The empty tuple is `ε`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Atom(String),
    Tuple(Vec<Outcome>),
}

impl Outcome {
    pub fn atom(label: impl Into<String>) -> Self {
        Outcome::Atom(label.into())
    }

    /// The empty word `ε`.
    pub fn epsilon() -> Self {
        Outcome::Tuple(Vec::new())
    }

    pub fn pair(x: Outcome, y: Outcome) -> Self {
        Outcome::Tuple(vec![x, y])
    }

    pub fn is_epsilon(&self) -> bool {
        matches!(self, Outcome::Tuple(v) if v.is_empty())
    }
}

/// Canonical parenthesized form: `a`, `(a,b)`, `((0,a),1)`; `ε` prints as `()`.
impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Atom(s) => f.write_str(s),
            Outcome::Tuple(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A finite ordered set of distinct outcome labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OutcomeSpace {
    labels: Vec<Outcome>,
}

impl OutcomeSpace {
    pub fn new(labels: Vec<Outcome>) -> Result<Self, DiagramError> {
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l) {
                return Err(DiagramError::DuplicateOutcome(l.to_string()));
            }
        }
        if labels.is_empty() {
            return Err(DiagramError::EmptyOutcomeSpace);
        }
        Ok(Self { labels })
    }

    pub fn from_atoms<I, S>(atoms: I) -> Result<Self, DiagramError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(atoms.into_iter().map(Outcome::atom).collect())
    }

    /// `{ε}`.
    pub fn singleton() -> Self {
        Self {
            labels: vec![Outcome::epsilon()],
        }
    }

    pub fn is_singleton_epsilon(&self) -> bool {
        self.labels.len() == 1 && self.labels[0].is_epsilon()
    }

    pub fn labels(&self) -> &[Outcome] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn position(&self, label: &Outcome) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Cartesian product with pair labels, `x` varying slowest. `{ε}` is a two-sided unit.
    pub fn product(&self, other: &OutcomeSpace) -> OutcomeSpace {
        if self.is_singleton_epsilon() {
            return other.clone();
        }
        if other.is_singleton_epsilon() {
            return self.clone();
        }
        let labels = self
            .labels
            .iter()
            .flat_map(|x| other.labels.iter().map(move |y| Outcome::pair(x.clone(), y.clone())))
            .collect();
        OutcomeSpace { labels }
    }

    /// Index pairs `(i, j)` in the order of [`OutcomeSpace::product`].
    pub(crate) fn product_indices(&self, other: &OutcomeSpace) -> Vec<(usize, usize)> {
        (0..self.len())
            .flat_map(|i| (0..other.len()).map(move |j| (i, j)))
            .collect()
    }
}
