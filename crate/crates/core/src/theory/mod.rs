//! Concrete finite-dimensional theories: complex quantum, real-amplitude quantum
//! and classical stochastic.
//!
//! Every system type gets a real state space `St_R(A)` and every box a transfer
//! matrix over it. Composition is matrix product, parallel composition is the
//! Kronecker product on the full representation (leftmost factor slowest), and
//! `Prob` reads the single entry of a `1×1` scalar.

mod backend;
pub mod basis;
mod physical;
mod transfer;

use thiserror::Error;

pub use backend::{kraus_from_vector, kraus_to_choi, BackendKind, TheoryBackend, Tolerances};
pub use physical::{Payload, PhysicalityCertificate, Violation};
pub use transfer::{EffectVector, StateVector, TransferMatrix};

use crate::diagram::SystemType;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoryError {
    #[error("unknown system {0}")]
    UnknownSystem(String),
    #[error("invalid system declaration {label} dim={dim}")]
    InvalidSystem { label: String, dim: usize },
    #[error("{what}: expected shape {expected:?}, found {found:?}")]
    Shape {
        what: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("not physical: {} = {} violates bound {}", .0.condition, .0.value, .0.bound)]
    NotPhysical(Violation),
    #[error("probability {value} outside [0, 1]")]
    OutOfRange { value: f64 },
    #[error("{input} -> {output} is not a scalar")]
    NotScalar { input: SystemType, output: SystemType },
    #[error("expected a state, input is {0}")]
    NotAState(SystemType),
    #[error("expected an effect, output is {0}")]
    NotAnEffect(SystemType),
    #[error("type mismatch: {left} vs {right}")]
    TypeMismatch { left: SystemType, right: SystemType },
    #[error("payload {kind} is not supported by the {backend} backend")]
    UnsupportedPayload { kind: &'static str, backend: &'static str },
    #[error("{what} is not available in the {backend} backend")]
    Unsupported { backend: &'static str, what: &'static str },
    #[error("empty input")]
    Empty,
}
