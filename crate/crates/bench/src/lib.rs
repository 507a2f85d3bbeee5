//! Fixed workloads shared by the benchmarks.

use opt_core::random::{random_channel, random_density, random_diagram, rng, Field};
use opt_core::{Diagram, Model, StateVector, SystemType, TheoryBackend, TransferMatrix};

/// A model holding two qubits and a qutrit, and a depth-4 random circuit on them.
pub fn circuit_workload(backend: TheoryBackend, seed: u64) -> (Model, Diagram) {
    let b = backend.with_system("a", 2).unwrap().with_system("t", 3).unwrap();
    let s = SystemType::from_labels(["a", "t"]);
    let mut m = Model::new(b);
    let mut r = rng(seed);
    let d = random_diagram(&mut r, &mut m, &s, &s, 4, 2).unwrap();
    (m, d)
}

/// A full-rank state of a `d`-level system.
pub fn mixed_state(d: usize, seed: u64) -> (TheoryBackend, StateVector) {
    let b = TheoryBackend::quantum().with_system("a", d).unwrap();
    let rho = random_density(&mut rng(seed), d, d, Field::Complex);
    let st = b.state_from_density(&SystemType::primitive("a"), &rho).unwrap();
    (b, st)
}

/// A random channel on a `d`-level system with `d²` Kraus operators.
pub fn channel(d: usize, seed: u64) -> (TheoryBackend, TransferMatrix) {
    let b = TheoryBackend::quantum().with_system("a", d).unwrap();
    let a = SystemType::primitive("a");
    let ks = random_channel(&mut rng(seed), d, d, d * d, Field::Complex);
    let t = b.transfer_from_kraus(&a, &a, &ks).unwrap();
    (b, t)
}
