use std::fmt;

use serde::{Serialize, Serializer};

/// A tensor word of primitive system labels. The empty word is the tensor unit `I`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SystemType {
    word: Vec<String>,
}

impl SystemType {
    /// The tensor unit.
    pub fn unit() -> Self {
        Self { word: Vec::new() }
    }

    pub fn primitive(label: impl Into<String>) -> Self {
        Self {
            word: vec![label.into()],
        }
    }

    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            word: labels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.word
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_unit(&self) -> bool {
        self.word.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    /// Word concatenation, the strict monoidal product on objects.
    pub fn tensor(&self, other: &SystemType) -> SystemType {
        let mut word = self.word.clone();
        word.extend(other.word.iter().cloned());
        SystemType { word }
    }

    /// Sub-word `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> SystemType {
        SystemType {
            word: self.word[start..end].to_vec(),
        }
    }

    /// Splits into the first `at` labels and the rest.
    pub fn split_at(&self, at: usize) -> (SystemType, SystemType) {
        (self.slice(0, at), self.slice(at, self.word.len()))
    }
}

/// Free-function form of [`SystemType::tensor`].
pub fn tensor_systems(a: &SystemType, b: &SystemType) -> SystemType {
    a.tensor(b)
}

impl fmt::Display for SystemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.word.is_empty() {
            return f.write_str("I");
        }
        f.write_str(&self.word.join(" * "))
    }
}

impl Serialize for SystemType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}
