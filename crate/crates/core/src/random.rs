//! Seeded generators of random physical objects for audits and property checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, hermitian_part, inverse_sqrt_on_support, trace, CMatrix, CVector, RMatrix};
pub use crate::theory::basis::Field;
use crate::diagram::{Diagram, OutcomeSpace, SystemType, Test};
use crate::eval::Model;
use crate::theory::{BackendKind, Payload, TheoryBackend, TheoryError, TransferMatrix};

pub type AuditRng = ChaCha8Rng;

pub fn rng(seed: u64) -> AuditRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent per-trial seed derived from a root seed (splitmix64 step).
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn field_of(kind: BackendKind) -> Field {
    match kind {
        BackendKind::QuantumReal => Field::Real,
        _ => Field::Complex,
    }
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, field: Field) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = match field {
            Field::Complex => rng.sample(StandardNormal),
            Field::Real => 0.0,
        };
        c(re, im)
    })
}

/// Haar-distributed unitary (orthogonal for the real field).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize, field: Field) -> CMatrix {
    let g = ginibre(rng, d, d, field);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = q.clone();
    for j in 0..d {
        let z = r[(j, j)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { c(1.0, 0.0) };
        for i in 0..d {
            u[(i, j)] = q[(i, j)] * phase;
        }
    }
    u
}

pub fn random_ket<R: Rng + ?Sized>(rng: &mut R, d: usize, field: Field) -> CVector {
    let g = ginibre(rng, d, 1, field);
    let n = g.norm();
    CVector::from_iterator(d, g.iter().map(|z| z / n))
}

/// Random density matrix of the given rank (induced measure).
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize, field: Field) -> CMatrix {
    let g = ginibre(rng, d, rank.max(1), field);
    let rho = &g * g.adjoint();
    let t = trace(&rho).re;
    hermitian_part(&rho.unscale(t))
}

/// Kraus operators of a random channel `din → dout` with `n` operators.
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, din: usize, dout: usize, n: usize, field: Field) -> Vec<CMatrix> {
    let gs: Vec<CMatrix> = (0..n.max(1)).map(|_| ginibre(rng, dout, din, field)).collect();
    normalize_kraus(&gs)
}

/// Rescales `{G_k}` to `{G_k S^{-1/2}}` with `S = Σ G_k† G_k`. A second pass
/// removes most of the rounding left by the first in larger dimensions.
pub fn normalize_kraus(gs: &[CMatrix]) -> Vec<CMatrix> {
    let once = |gs: &[CMatrix]| -> Vec<CMatrix> {
        let din = gs[0].ncols();
        let mut s = CMatrix::zeros(din, din);
        for g in gs {
            s += g.adjoint() * g;
        }
        let (inv, _) = inverse_sqrt_on_support(&s);
        gs.iter().map(|g| g * &inv).collect()
    };
    once(&once(gs))
}

/// A random instrument: outcome `x` gets the Kraus operators `groups[x]`.
pub fn random_instrument<R: Rng + ?Sized>(
    rng: &mut R,
    din: usize,
    dout: usize,
    outcomes: usize,
    kraus_per_outcome: usize,
    field: Field,
) -> Vec<Vec<CMatrix>> {
    let all = random_channel(rng, din, dout, outcomes * kraus_per_outcome, field);
    all.chunks(kraus_per_outcome).map(|ch| ch.to_vec()).collect()
}

/// Random POVM with `outcomes` elements.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, d: usize, outcomes: usize, field: Field) -> Vec<CMatrix> {
    let parts: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = ginibre(rng, d, d, field);
            &g * g.adjoint()
        })
        .collect();
    let mut s = CMatrix::zeros(d, d);
    for p in &parts {
        s += p;
    }
    let (inv, _) = inverse_sqrt_on_support(&s);
    let parts: Vec<CMatrix> = parts.iter().map(|p| hermitian_part(&(&inv * p * &inv))).collect();
    let s = parts.iter().fold(CMatrix::zeros(d, d), |acc, p| acc + p);
    let (inv, _) = inverse_sqrt_on_support(&s);
    parts.iter().map(|p| hermitian_part(&(&inv * p * &inv))).collect()
}

pub fn random_probabilities<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

/// Column-stochastic `rows × cols` matrix.
pub fn random_stochastic<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> RMatrix {
    let mut m = RMatrix::zeros(rows, cols);
    for j in 0..cols {
        let p = random_probabilities(rng, rows);
        for i in 0..rows {
            m[(i, j)] = p[i];
        }
    }
    m
}

/// Splits a nonnegative matrix entrywise into `parts` nonnegative summands.
pub fn random_split<R: Rng + ?Sized>(rng: &mut R, m: &RMatrix, parts: usize) -> Vec<RMatrix> {
    let mut out = vec![RMatrix::zeros(m.nrows(), m.ncols()); parts];
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let w = random_probabilities(rng, parts);
            for (k, o) in out.iter_mut().enumerate() {
                o[(i, j)] = m[(i, j)] * w[k];
            }
        }
    }
    out
}

/// Random physical deterministic box `input → output` of the backend.
pub fn random_transfer<R: Rng + ?Sized>(
    rng: &mut R,
    backend: &TheoryBackend,
    input: &SystemType,
    output: &SystemType,
) -> Result<TransferMatrix, TheoryError> {
    let (din, dout) = (backend.total_dim(input)?, backend.total_dim(output)?);
    let payload = match backend.kind() {
        BackendKind::Classical => Payload::Stochastic(random_stochastic(rng, dout, din)),
        kind => {
            // fewer than din / dout operators cannot be trace preserving
            let n = rng.random_range(1..=3).max(din.div_ceil(dout));
            Payload::Kraus(random_channel(rng, din, dout, n, field_of(kind)))
        }
    };
    backend.compile_box(input, output, &payload)
}

/// Random composite of at most `max_len` factors drawn from the declared systems.
pub fn random_system<R: Rng + ?Sized>(rng: &mut R, backend: &TheoryBackend, max_len: usize) -> SystemType {
    let labels: Vec<&str> = backend.declared_systems().map(|(l, _)| l).collect();
    let len = rng.random_range(0..=max_len);
    SystemType::from_labels((0..len).map(|_| labels[rng.random_range(0..labels.len())]))
}

/// Random well-typed diagram `input → output` of depth at most `depth`. Leaves
/// are fresh random boxes registered in `model`; inner nodes are sequential
/// composites through random intermediate systems (at most `max_len` factors),
/// parallel composites of random splittings, and swaps.
pub fn random_diagram<R: Rng + ?Sized>(
    rng: &mut R,
    model: &mut Model,
    input: &SystemType,
    output: &SystemType,
    depth: usize,
    max_len: usize,
) -> Result<Diagram, TheoryError> {
    let choice = if depth == 0 { 0 } else { rng.random_range(0..5) };
    match choice {
        1 => {
            let mid = random_system(rng, model.backend(), max_len);
            let d1 = random_diagram(rng, model, input, &mid, depth - 1, max_len)?;
            let d2 = random_diagram(rng, model, &mid, output, depth - 1, max_len)?;
            Ok(Diagram::seq(&d1, &d2).expect("types agree"))
        }
        2 => {
            let (i1, i2) = input.split_at(rng.random_range(0..=input.len()));
            let (o1, o2) = output.split_at(rng.random_range(0..=output.len()));
            let d1 = random_diagram(rng, model, &i1, &o1, depth - 1, max_len)?;
            let d2 = random_diagram(rng, model, &i2, &o2, depth - 1, max_len)?;
            Ok(Diagram::par(&d1, &d2))
        }
        3 if input.len() >= 2 => {
            let (a, b) = input.split_at(rng.random_range(1..input.len()));
            let sw = Diagram::swap(a.clone(), b.clone());
            let rest = random_diagram(rng, model, &b.tensor(&a), output, depth - 1, max_len)?;
            Ok(Diagram::seq(&sw, &rest).expect("types agree"))
        }
        4 if input == output => Ok(Diagram::identity(input.clone())),
        _ => {
            let t = random_transfer(rng, model.backend(), input, output)?;
            let name = format!("g{}", model.box_names().count());
            Ok(model.insert_box(name, t))
        }
    }
}

/// Branches of a random complete test `input → output` with the given number
/// of outcomes: a random instrument (quantum) or an entrywise split of a
/// random stochastic matrix (classical).
pub fn random_test_branches<R: Rng + ?Sized>(
    rng: &mut R,
    backend: &TheoryBackend,
    input: &SystemType,
    output: &SystemType,
    outcomes: usize,
) -> Result<Vec<TransferMatrix>, TheoryError> {
    let (din, dout) = (backend.total_dim(input)?, backend.total_dim(output)?);
    match backend.kind() {
        BackendKind::Classical => {
            let m = random_stochastic(rng, dout, din);
            random_split(rng, &m, outcomes)
                .into_iter()
                .map(|m| backend.compile_box(input, output, &Payload::Stochastic(m)))
                .collect()
        }
        kind => {
            let k = rng.random_range(1..=2).max(din.div_ceil(dout * outcomes));
            random_instrument(rng, din, dout, outcomes, k, field_of(kind))
                .iter()
                .map(|ks| backend.transfer_from_kraus(input, output, ks))
                .collect()
        }
    }
}

/// A random complete test registered in `model` under `name[0]`, `name[1]`, ….
pub fn random_test<R: Rng + ?Sized>(
    rng: &mut R,
    model: &mut Model,
    name: &str,
    input: &SystemType,
    output: &SystemType,
    outcomes: usize,
) -> Result<Test, TheoryError> {
    let branches = random_test_branches(rng, model.backend(), input, output, outcomes)?;
    let diagrams = branches
        .into_iter()
        .enumerate()
        .map(|(x, t)| model.insert_box(format!("{name}[{x}]"), t))
        .collect();
    let space = OutcomeSpace::from_atoms((0..outcomes).map(|x| x.to_string())).expect("distinct labels");
    Ok(Test::new(space, diagrams).expect("branches share one type"))
}
