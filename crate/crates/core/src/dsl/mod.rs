//! The textual theory format: lexer, parser, canonical printer and loader.
//!
//! ```text
//! theory quantum
//! system q dim=2
//! state plus : q = vec=[0.7071067811865476, 0.7071067811865476]
//! test z : q -> I outcomes={0,1} { 0: dens=[[1, 0], [0, 0]]; 1: dens=[[0, 0], [0, 1]] }
//! circuit c = plus ; z
//! ```

pub mod ast;
mod lexer;
mod loader;
mod parser;
mod printer;

use serde::Serialize;
use thiserror::Error;

pub use ast::TheoryFile;
pub use lexer::{lex, Tok, Token};
pub use loader::{load, load_document, Entry, LoadedCircuit, LoadedTest, LoadedTheory};
pub use parser::parse;
pub use printer::print;

use crate::theory::Violation;

/// 1-based line and column.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl Span {
    pub fn new(line: usize, column: usize) -> Self {
        Self { line, column }
    }
}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DslError {
    #[error("{span}: syntax error: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        span: Span,
        expected: Vec<String>,
        found: String,
    },
    #[error("{span}: unknown reference `{name}`")]
    UnknownReference { span: Span, name: String },
    #[error("{span}: `{name}` is already defined")]
    DuplicateDefinition { span: Span, name: String },
    #[error("{span}: dimension mismatch: {message}")]
    DimensionMismatch { span: Span, message: String },
    #[error("{span}: payload is not physical: {} = {} (bound {})", violation.condition, violation.value, violation.bound)]
    NotPhysical { span: Span, violation: Violation },
    #[error("{span}: invalid payload: {message}")]
    InvalidPayload { span: Span, message: String },
}

impl DslError {
    pub fn span(&self) -> Span {
        match self {
            DslError::Syntax { span, .. }
            | DslError::UnknownReference { span, .. }
            | DslError::DuplicateDefinition { span, .. }
            | DslError::DimensionMismatch { span, .. }
            | DslError::NotPhysical { span, .. }
            | DslError::InvalidPayload { span, .. } => *span,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            DslError::Syntax { .. } => "SyntaxError",
            DslError::UnknownReference { .. } => "UnknownReference",
            DslError::DuplicateDefinition { .. } => "DuplicateDefinition",
            DslError::DimensionMismatch { .. } => "DimensionMismatch",
            DslError::NotPhysical { .. } => "NotPhysical",
            DslError::InvalidPayload { .. } => "InvalidPayload",
        }
    }

    /// JSON object with the error kind, location, message and expected tokens.
    pub fn report(&self) -> serde_json::Value {
        let span = self.span();
        let mut v = serde_json::json!({
            "error": self.kind(),
            "line": span.line,
            "column": span.column,
            "message": self.to_string(),
        });
        if let DslError::Syntax { expected, .. } = self {
            v["expected"] = serde_json::json!(expected);
        }
        if let DslError::NotPhysical { violation, .. } = self {
            v["violation"] = serde_json::to_value(violation).expect("violation serializes");
        }
        v
    }
}
