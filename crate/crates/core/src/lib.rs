//! Verification workbench for operational-probabilistic theories.
//!
//! Circuits of tests are written in a model-free symmetric monoidal IR
//! ([`diagram`]), evaluated against finite-dimensional backends ([`theory`],
//! [`eval`]), compared up to operational equivalence ([`tomography`]) and
//! audited against the purification-based axioms and dilation constructions
//! ([`audit`]). [`dsl`] reads and writes the textual theory format.

pub mod audit;
pub mod diagram;
pub mod dsl;
pub mod eval;
pub mod linalg;
pub mod random;
pub mod report;
pub mod theory;
pub mod tomography;

pub use diagram::{par, seq, test_par, test_seq, Diagram, Outcome, OutcomeSpace, SystemType, Test};
pub use eval::{evaluate, run_test_circuit, Model, OutcomeDistribution};
pub use theory::{
    BackendKind, EffectVector, Payload, PhysicalityCertificate, StateVector, TheoryBackend, Tolerances,
    TransferMatrix,
};
