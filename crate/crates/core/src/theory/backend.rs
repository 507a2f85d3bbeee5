use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DVector;

use super::basis::{Field, OperatorBasis};
use super::physical::{Payload, PhysicalityCertificate};
use super::transfer::{EffectVector, StateVector, TransferMatrix};
use super::TheoryError;
use crate::diagram::SystemType;
use crate::linalg::{c, eigenvalues_desc, max_abs_c, partial_trace, CMatrix, CVector, RMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BackendKind {
    /// Complex Hilbert-space quantum theory.
    Quantum,
    /// Quantum theory over real amplitudes.
    QuantumReal,
    /// Classical stochastic theory.
    Classical,
}

impl BackendKind {
    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Quantum => "quantum",
            BackendKind::QuantumReal => "quantum-real",
            BackendKind::Classical => "classical",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "quantum" => Some(BackendKind::Quantum),
            "quantum-real" => Some(BackendKind::QuantumReal),
            "classical" => Some(BackendKind::Classical),
            _ => None,
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Cone and normalization membership (eigenvalue floor is `-physical`).
    pub physical: f64,
    /// Algebraic identities between transfer matrices.
    pub algebraic: f64,
    /// Sums of outcome probabilities and marginal reproduction.
    pub normalization: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            physical: 1e-9,
            algebraic: 1e-12,
            normalization: 1e-10,
        }
    }
}

/// A finite-dimensional model theory.
///
/// Primitive systems are declared with a Hilbert (or sample-space) dimension.
/// Labels of the form `@d` are always available and denote auxiliary systems of
/// dimension `d`; audits use them for purifying systems, environments and pointers.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoryBackend {
    kind: BackendKind,
    systems: BTreeMap<String, usize>,
    tol: Tolerances,
}

impl TheoryBackend {
    pub fn new(kind: BackendKind) -> Self {
        Self {
            kind,
            systems: BTreeMap::new(),
            tol: Tolerances::default(),
        }
    }

    pub fn quantum() -> Self {
        Self::new(BackendKind::Quantum)
    }

    pub fn quantum_real() -> Self {
        Self::new(BackendKind::QuantumReal)
    }

    pub fn classical() -> Self {
        Self::new(BackendKind::Classical)
    }

    pub fn with_system(mut self, label: &str, dim: usize) -> Result<Self, TheoryError> {
        self.declare_system(label, dim)?;
        Ok(self)
    }

    pub fn declare_system(&mut self, label: &str, dim: usize) -> Result<(), TheoryError> {
        if dim == 0 || label.is_empty() || label.starts_with('@') || label == "I" {
            return Err(TheoryError::InvalidSystem {
                label: label.to_string(),
                dim,
            });
        }
        self.systems.insert(label.to_string(), dim);
        Ok(())
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn set_tolerances(&mut self, tol: Tolerances) {
        self.tol = tol;
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub fn kind(&self) -> BackendKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn declared_systems(&self) -> impl Iterator<Item = (&str, usize)> {
        self.systems.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// The auxiliary system of dimension `d`, or `I` for `d = 1`.
    pub fn ancilla(d: usize) -> SystemType {
        if d <= 1 {
            SystemType::unit()
        } else {
            SystemType::primitive(format!("@{d}"))
        }
    }

    pub fn locally_tomographic(&self) -> bool {
        self.kind != BackendKind::QuantumReal
    }

    pub(crate) fn field(&self) -> Option<Field> {
        match self.kind {
            BackendKind::Quantum => Some(Field::Complex),
            BackendKind::QuantumReal => Some(Field::Real),
            BackendKind::Classical => None,
        }
    }

    pub fn hilbert_dim(&self, label: &str) -> Result<usize, TheoryError> {
        if let Some(rest) = label.strip_prefix('@') {
            return rest
                .parse::<usize>()
                .ok()
                .filter(|&d| d > 0)
                .ok_or_else(|| TheoryError::UnknownSystem(label.to_string()));
        }
        self.systems
            .get(label)
            .copied()
            .ok_or_else(|| TheoryError::UnknownSystem(label.to_string()))
    }

    /// Per-label Hilbert dimensions.
    pub fn dims(&self, s: &SystemType) -> Result<Vec<usize>, TheoryError> {
        s.labels().iter().map(|l| self.hilbert_dim(l)).collect()
    }

    /// Total Hilbert (or sample-space) dimension.
    pub fn total_dim(&self, s: &SystemType) -> Result<usize, TheoryError> {
        Ok(self.dims(s)?.iter().product())
    }

    /// Dimension of `St_R(s)`.
    pub fn state_dim(&self, s: &SystemType) -> Result<usize, TheoryError> {
        let dims = self.dims(s)?;
        Ok(match self.kind {
            BackendKind::Quantum => dims.iter().map(|d| d * d).product(),
            BackendKind::QuantumReal => {
                let n: usize = dims.iter().product();
                n * (n + 1) / 2
            }
            BackendKind::Classical => dims.iter().product(),
        })
    }

    /// Dimension of the representation composition acts on.
    pub fn full_dim(&self, s: &SystemType) -> Result<usize, TheoryError> {
        let dims = self.dims(s)?;
        Ok(match self.kind {
            BackendKind::Classical => dims.iter().product(),
            _ => dims.iter().map(|d| d * d).product(),
        })
    }

    pub fn basis(&self, s: &SystemType) -> Result<OperatorBasis, TheoryError> {
        let field = self.field().ok_or(TheoryError::Unsupported {
            backend: self.name(),
            what: "operator basis",
        })?;
        Ok(OperatorBasis::new(&self.dims(s)?, field))
    }

    /// Positions of `St_R(s)` inside the full representation, when it is a proper subspace.
    pub(crate) fn state_indices(&self, s: &SystemType) -> Result<Option<Vec<usize>>, TheoryError> {
        if self.kind != BackendKind::QuantumReal {
            return Ok(None);
        }
        Ok(Some(self.basis(s)?.symmetric_indices()))
    }

    pub fn transfer_from_full(
        &self,
        input: &SystemType,
        output: &SystemType,
        full: RMatrix,
    ) -> Result<TransferMatrix, TheoryError> {
        let (rows, cols) = (self.full_dim(output)?, self.full_dim(input)?);
        if full.shape() != (rows, cols) {
            return Err(TheoryError::Shape {
                what: "transfer matrix",
                expected: (rows, cols),
                found: full.shape(),
            });
        }
        match (self.state_indices(output)?, self.state_indices(input)?) {
            (Some(ro), Some(ci)) => {
                let restricted = RMatrix::from_fn(ro.len(), ci.len(), |i, j| full[(ro[i], ci[j])]);
                Ok(TransferMatrix::from_parts(
                    input.clone(),
                    output.clone(),
                    restricted,
                    Some(full),
                ))
            }
            _ => Ok(TransferMatrix::from_parts(input.clone(), output.clone(), full, None)),
        }
    }

    /// Embeds coordinates of `St_R(s)` into the full representation.
    pub(crate) fn embed(&self, s: &SystemType, coords: &DVector<f64>) -> Result<DVector<f64>, TheoryError> {
        match self.state_indices(s)? {
            None => Ok(coords.clone()),
            Some(idx) => {
                let mut full = DVector::zeros(self.full_dim(s)?);
                for (k, &i) in idx.iter().enumerate() {
                    full[i] = coords[k];
                }
                Ok(full)
            }
        }
    }

    pub(crate) fn restrict_vec(&self, s: &SystemType, full: &DVector<f64>) -> Result<DVector<f64>, TheoryError> {
        match self.state_indices(s)? {
            None => Ok(full.clone()),
            Some(idx) => Ok(DVector::from_iterator(idx.len(), idx.iter().map(|&i| full[i]))),
        }
    }

    pub fn identity(&self, s: &SystemType) -> Result<TransferMatrix, TheoryError> {
        let n = self.full_dim(s)?;
        self.transfer_from_full(s, s, RMatrix::identity(n, n))
    }

    /// `A ⊗ B → B ⊗ A` as a permutation of product coordinates.
    pub fn swap(&self, a: &SystemType, b: &SystemType) -> Result<TransferMatrix, TheoryError> {
        let (na, nb) = (self.full_dim(a)?, self.full_dim(b)?);
        let mut p = RMatrix::zeros(na * nb, na * nb);
        for i in 0..na {
            for j in 0..nb {
                p[(j * na + i, i * nb + j)] = 1.0;
            }
        }
        self.transfer_from_full(&a.tensor(b), &b.tensor(a), p)
    }

    /// Sequential composition `second ∘ first`.
    pub fn compose(&self, first: &TransferMatrix, second: &TransferMatrix) -> Result<TransferMatrix, TheoryError> {
        if first.output_type() != second.input_type() {
            return Err(TheoryError::TypeMismatch {
                left: first.output_type().clone(),
                right: second.input_type().clone(),
            });
        }
        self.transfer_from_full(
            first.input_type(),
            second.output_type(),
            second.full() * first.full(),
        )
    }

    pub fn tensor(&self, a: &TransferMatrix, b: &TransferMatrix) -> Result<TransferMatrix, TheoryError> {
        self.transfer_from_full(
            &a.input_type().tensor(b.input_type()),
            &a.output_type().tensor(b.output_type()),
            a.full().kronecker(b.full()),
        )
    }

    pub fn sum(&self, items: &[TransferMatrix]) -> Result<TransferMatrix, TheoryError> {
        let first = items.first().ok_or(TheoryError::Empty)?;
        let mut acc = first.full().clone();
        for t in &items[1..] {
            if t.input_type() != first.input_type() || t.output_type() != first.output_type() {
                return Err(TheoryError::TypeMismatch {
                    left: t.input_type().clone(),
                    right: first.input_type().clone(),
                });
            }
            acc += t.full();
        }
        self.transfer_from_full(first.input_type(), first.output_type(), acc)
    }

    pub fn scale(&self, t: &TransferMatrix, factor: f64) -> Result<TransferMatrix, TheoryError> {
        self.transfer_from_full(t.input_type(), t.output_type(), t.full() * factor)
    }

    /// The deterministic effect. Built factor by factor, so
    /// `Tr_{A⊗B} = Tr_A ⊗ Tr_B` holds bit for bit.
    pub fn trace_effect(&self, s: &SystemType) -> Result<EffectVector, TheoryError> {
        let t = self.trace_transfer(s)?;
        Ok(EffectVector::new(s.clone(), t.matrix().row(0).transpose()))
    }

    pub fn trace_transfer(&self, s: &SystemType) -> Result<TransferMatrix, TheoryError> {
        let mut row = RMatrix::from_element(1, 1, 1.0);
        for label in s.labels() {
            let d = self.hilbert_dim(label)?;
            let prim = match self.kind {
                BackendKind::Classical => RMatrix::from_element(1, d, 1.0),
                _ => {
                    let mut r = RMatrix::zeros(1, d * d);
                    r[(0, 0)] = 1.0;
                    r
                }
            };
            row = row.kronecker(&prim);
        }
        self.transfer_from_full(s, &SystemType::unit(), row)
    }

    /// `Prob` on a scalar. Reports the unclamped value.
    pub fn prob(&self, scalar: &TransferMatrix) -> Result<f64, TheoryError> {
        let p = scalar.scalar_value().ok_or_else(|| TheoryError::NotScalar {
            input: scalar.input_type().clone(),
            output: scalar.output_type().clone(),
        })?;
        let tol = self.tol.physical;
        if !(-tol..=1.0 + tol).contains(&p) || !p.is_finite() {
            return Err(TheoryError::OutOfRange { value: p });
        }
        Ok(p)
    }

    // ---- operator backends: Choi <-> transfer ----

    /// Transfer matrix on the full representation of the map with Choi matrix `choi`.
    pub(crate) fn full_from_choi(
        &self,
        input: &SystemType,
        output: &SystemType,
        choi: &CMatrix,
    ) -> Result<RMatrix, TheoryError> {
        let bi = self.basis(input)?;
        let bo = self.basis(output)?;
        let (di, dout) = (bi.hilbert_dim(), bo.hilbert_dim());
        expect_shape("choi", choi, di * dout)?;
        // vec(M(X)) = S vec(X) with S[(a,b),(i,j)] = C[(i,a),(j,b)]
        let mut s = CMatrix::zeros(dout * dout, di * di);
        for i in 0..di {
            for j in 0..di {
                for a in 0..dout {
                    for b in 0..dout {
                        s[(a * dout + b, i * di + j)] = choi[(i * dout + a, j * dout + b)];
                    }
                }
            }
        }
        let t = bo.analysis() * s * bi.synthesis();
        Ok(t.map(|z| z.re))
    }

    /// Unnormalized Choi matrix of a transfer matrix (operator backends).
    pub fn choi(&self, t: &TransferMatrix) -> Result<CMatrix, TheoryError> {
        let bi = self.basis(t.input_type())?;
        let bo = self.basis(t.output_type())?;
        let (di, dout) = (bi.hilbert_dim(), bo.hilbert_dim());
        let tc = t.full().map(|x| c(x, 0.0));
        let s = bo.synthesis() * tc * bi.analysis();
        let mut choi = CMatrix::zeros(di * dout, di * dout);
        for i in 0..di {
            for j in 0..di {
                for a in 0..dout {
                    for b in 0..dout {
                        choi[(i * dout + a, j * dout + b)] = s[(a * dout + b, i * di + j)];
                    }
                }
            }
        }
        Ok(choi)
    }

    pub fn check_choi(&self, input: &SystemType, output: &SystemType, choi: &CMatrix) -> Result<PhysicalityCertificate, TheoryError> {
        let di = self.total_dim(input)?;
        let dout = self.total_dim(output)?;
        expect_shape("choi", choi, di * dout)?;
        let tol = self.tol.physical;
        let herm = max_abs_c(&(choi - choi.adjoint()));
        if herm > tol {
            return Ok(PhysicalityCertificate::upper("hermiticity", herm, 0.0));
        }
        if self.kind == BackendKind::QuantumReal {
            let imag = choi.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
            if imag > tol {
                return Ok(PhysicalityCertificate::upper("real-entries", imag, 0.0));
            }
        }
        // complete positivity, read off the Choi state C / d_in
        let min = eigenvalues_desc(&choi.unscale(di as f64)).last().copied().unwrap_or(0.0);
        if min < -tol {
            return Ok(PhysicalityCertificate::lower("choi-positivity", min, 0.0));
        }
        let mut dims = vec![di, dout];
        let mut keep = vec![true, false];
        if dout == 1 {
            dims.pop();
            keep.pop();
        }
        let marginal = partial_trace(choi, &dims, &keep);
        let max = eigenvalues_desc(&marginal).first().copied().unwrap_or(0.0);
        if max > 1.0 + tol {
            return Ok(PhysicalityCertificate::upper("trace-non-increasing", max, 1.0));
        }
        Ok(PhysicalityCertificate::Physical)
    }

    pub fn check_stochastic(&self, m: &RMatrix) -> PhysicalityCertificate {
        let tol = self.tol.physical;
        let min = m.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -tol {
            return PhysicalityCertificate::lower("nonnegativity", min, 0.0);
        }
        let max_col = (0..m.ncols())
            .map(|j| m.column(j).sum())
            .fold(f64::NEG_INFINITY, f64::max);
        if max_col > 1.0 + tol {
            return PhysicalityCertificate::upper("column-sum", max_col, 1.0);
        }
        PhysicalityCertificate::Physical
    }

    pub fn is_physical(&self, t: &TransferMatrix) -> Result<PhysicalityCertificate, TheoryError> {
        match self.kind {
            BackendKind::Classical => Ok(self.check_stochastic(t.matrix())),
            _ => {
                let choi = self.choi(t)?;
                self.check_choi(t.input_type(), t.output_type(), &choi)
            }
        }
    }

    // ---- payloads ----

    /// Choi matrix of an operator-backend payload.
    pub(crate) fn payload_choi(
        &self,
        input: &SystemType,
        output: &SystemType,
        payload: &Payload,
    ) -> Result<CMatrix, TheoryError> {
        let di = self.total_dim(input)?;
        let dout = self.total_dim(output)?;
        match payload {
            Payload::Choi(m) => {
                expect_shape("choi", m, di * dout)?;
                Ok(m.clone())
            }
            Payload::Kraus(ks) => {
                if ks.is_empty() {
                    return Err(TheoryError::Empty);
                }
                for k in ks {
                    if k.shape() != (dout, di) {
                        return Err(TheoryError::Shape {
                            what: "kraus operator",
                            expected: (dout, di),
                            found: k.shape(),
                        });
                    }
                }
                Ok(kraus_to_choi(ks))
            }
            Payload::Density(m) => self.operator_choi(input, output, m.clone()),
            Payload::Ket(v) => {
                let m = v * v.adjoint();
                self.operator_choi(input, output, m)
            }
            Payload::Stochastic(_) | Payload::Probabilities(_) => Err(TheoryError::UnsupportedPayload {
                kind: payload.kind(),
                backend: self.name(),
            }),
        }
    }

    fn operator_choi(&self, input: &SystemType, output: &SystemType, m: CMatrix) -> Result<CMatrix, TheoryError> {
        if input.is_unit() {
            let d = self.total_dim(output)?;
            expect_shape("density", &m, d)?;
            Ok(m)
        } else if output.is_unit() {
            let d = self.total_dim(input)?;
            expect_shape("effect operator", &m, d)?;
            Ok(m.transpose())
        } else {
            Err(TheoryError::UnsupportedPayload {
                kind: "dens/vec on a transformation",
                backend: self.name(),
            })
        }
    }

    fn payload_stochastic(&self, input: &SystemType, output: &SystemType, payload: &Payload) -> Result<RMatrix, TheoryError> {
        let di = self.total_dim(input)?;
        let dout = self.total_dim(output)?;
        match payload {
            Payload::Stochastic(m) => {
                if m.shape() != (dout, di) {
                    return Err(TheoryError::Shape {
                        what: "stochastic matrix",
                        expected: (dout, di),
                        found: m.shape(),
                    });
                }
                Ok(m.clone())
            }
            Payload::Probabilities(p) if input.is_unit() => {
                if p.len() != dout {
                    return Err(TheoryError::Shape {
                        what: "probability vector",
                        expected: (dout, 1),
                        found: (p.len(), 1),
                    });
                }
                Ok(RMatrix::from_column_slice(dout, 1, p))
            }
            Payload::Probabilities(p) if output.is_unit() => {
                if p.len() != di {
                    return Err(TheoryError::Shape {
                        what: "response vector",
                        expected: (1, di),
                        found: (1, p.len()),
                    });
                }
                Ok(RMatrix::from_row_slice(1, di, p))
            }
            _ => Err(TheoryError::UnsupportedPayload {
                kind: payload.kind(),
                backend: self.name(),
            }),
        }
    }

    pub fn is_physical_payload(
        &self,
        input: &SystemType,
        output: &SystemType,
        payload: &Payload,
    ) -> Result<PhysicalityCertificate, TheoryError> {
        match self.kind {
            BackendKind::Classical => Ok(self.check_stochastic(&self.payload_stochastic(input, output, payload)?)),
            _ => {
                let choi = self.payload_choi(input, output, payload)?;
                self.check_choi(input, output, &choi)
            }
        }
    }

    /// Compiles a payload after checking it is physical.
    pub fn compile_box(&self, input: &SystemType, output: &SystemType, payload: &Payload) -> Result<TransferMatrix, TheoryError> {
        match self.kind {
            BackendKind::Classical => {
                let m = self.payload_stochastic(input, output, payload)?;
                reject(self.check_stochastic(&m))?;
                self.transfer_from_full(input, output, m)
            }
            _ => {
                let choi = self.payload_choi(input, output, payload)?;
                reject(self.check_choi(input, output, &choi)?)?;
                self.transfer_from_choi(input, output, &choi)
            }
        }
    }

    /// Transfer matrix of a Choi matrix without the physicality check.
    pub fn transfer_from_choi(&self, input: &SystemType, output: &SystemType, choi: &CMatrix) -> Result<TransferMatrix, TheoryError> {
        let full = self.full_from_choi(input, output, choi)?;
        self.transfer_from_full(input, output, full)
    }

    pub fn transfer_from_kraus(&self, input: &SystemType, output: &SystemType, kraus: &[CMatrix]) -> Result<TransferMatrix, TheoryError> {
        self.transfer_from_choi(input, output, &kraus_to_choi(kraus))
    }

    // ---- states and effects ----

    pub fn state_from_density(&self, s: &SystemType, rho: &CMatrix) -> Result<StateVector, TheoryError> {
        let b = self.basis(s)?;
        expect_shape("density", rho, b.hilbert_dim())?;
        let full = b.coords(rho).map(|z| z.re);
        Ok(StateVector::new(s.clone(), self.restrict_vec(s, &full)?))
    }

    pub fn state_from_ket(&self, s: &SystemType, psi: &CVector) -> Result<StateVector, TheoryError> {
        self.state_from_density(s, &(psi * psi.adjoint()))
    }

    pub fn density(&self, state: &StateVector) -> Result<CMatrix, TheoryError> {
        let b = self.basis(&state.system)?;
        let full = self.embed(&state.system, &state.coords)?;
        Ok(b.expand(&full.map(|x| c(x, 0.0))))
    }

    pub fn effect_from_operator(&self, s: &SystemType, e: &CMatrix) -> Result<EffectVector, TheoryError> {
        let b = self.basis(s)?;
        expect_shape("effect operator", e, b.hilbert_dim())?;
        let full = b.effect_coords(e).map(|z| z.re);
        Ok(EffectVector::new(s.clone(), self.restrict_vec(s, &full)?))
    }

    pub fn effect_operator(&self, effect: &EffectVector) -> Result<CMatrix, TheoryError> {
        let b = self.basis(&effect.system)?;
        let full = self.embed(&effect.system, &effect.coords)?;
        Ok(b.effect_operator(&full.map(|x| c(x, 0.0))))
    }

    pub fn state_transfer(&self, state: &StateVector) -> Result<TransferMatrix, TheoryError> {
        let full = self.embed(&state.system, &state.coords)?;
        self.transfer_from_full(&SystemType::unit(), &state.system, RMatrix::from_column_slice(full.len(), 1, full.as_slice()))
    }

    pub fn effect_transfer(&self, effect: &EffectVector) -> Result<TransferMatrix, TheoryError> {
        let full = self.embed(&effect.system, &effect.coords)?;
        self.transfer_from_full(&effect.system, &SystemType::unit(), RMatrix::from_row_slice(1, full.len(), full.as_slice()))
    }

    pub fn state_of(&self, t: &TransferMatrix) -> Result<StateVector, TheoryError> {
        if !t.input_type().is_unit() {
            return Err(TheoryError::NotAState(t.input_type().clone()));
        }
        Ok(StateVector::new(t.output_type().clone(), t.matrix().column(0).into_owned()))
    }

    pub fn effect_of(&self, t: &TransferMatrix) -> Result<EffectVector, TheoryError> {
        if !t.output_type().is_unit() {
            return Err(TheoryError::NotAnEffect(t.output_type().clone()));
        }
        Ok(EffectVector::new(t.input_type().clone(), t.matrix().row(0).transpose()))
    }

    /// Applies a transformation to a state.
    pub fn apply(&self, t: &TransferMatrix, state: &StateVector) -> Result<StateVector, TheoryError> {
        let out = self.compose(&self.state_transfer(state)?, t)?;
        self.state_of(&out)
    }

    pub fn check_state(&self, state: &StateVector) -> Result<PhysicalityCertificate, TheoryError> {
        self.is_physical(&self.state_transfer(state)?)
    }

    pub fn state_from_probs(&self, s: &SystemType, p: &[f64]) -> Result<StateVector, TheoryError> {
        if self.kind != BackendKind::Classical {
            return Err(TheoryError::Unsupported {
                backend: self.name(),
                what: "probability-vector states",
            });
        }
        let d = self.total_dim(s)?;
        if p.len() != d {
            return Err(TheoryError::Shape {
                what: "probability vector",
                expected: (d, 1),
                found: (p.len(), 1),
            });
        }
        Ok(StateVector::new(s.clone(), DVector::from_column_slice(p)))
    }

    /// Kets whose projectors form a basis of the state space of a single block of dimension `d`.
    fn spanning_kets(&self, d: usize) -> Vec<CVector> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut kets = Vec::new();
        for j in 0..d {
            let mut v = CVector::zeros(d);
            v[j] = c(1.0, 0.0);
            kets.push(v);
        }
        for j in 0..d {
            for k in (j + 1)..d {
                let mut v = CVector::zeros(d);
                v[j] = c(r, 0.0);
                v[k] = c(r, 0.0);
                kets.push(v);
            }
        }
        if self.kind == BackendKind::Quantum {
            for j in 0..d {
                for k in (j + 1)..d {
                    let mut v = CVector::zeros(d);
                    v[j] = c(r, 0.0);
                    v[k] = c(0.0, r);
                    kets.push(v);
                }
            }
        }
        kets
    }

    /// Physical states spanning `St_R(s)`. In locally tomographic backends these
    /// are products of the factors' spanning states.
    pub fn spanning_states(&self, s: &SystemType) -> Result<Vec<StateVector>, TheoryError> {
        match self.kind {
            BackendKind::Classical => {
                let d = self.total_dim(s)?;
                Ok((0..d)
                    .map(|i| {
                        let mut v = DVector::zeros(d);
                        v[i] = 1.0;
                        StateVector::new(s.clone(), v)
                    })
                    .collect())
            }
            BackendKind::Quantum if s.len() > 1 => {
                let mut acc = vec![DVector::from_element(1, 1.0)];
                for label in s.labels() {
                    let part = self.spanning_states(&SystemType::primitive(label.clone()))?;
                    acc = acc
                        .iter()
                        .flat_map(|a| part.iter().map(move |p| a.kronecker(&p.coords)))
                        .collect();
                }
                Ok(acc.into_iter().map(|v| StateVector::new(s.clone(), v)).collect())
            }
            _ => {
                let d = self.total_dim(s)?;
                self.spanning_kets(d)
                    .iter()
                    .map(|k| self.state_from_ket(s, k))
                    .collect()
            }
        }
    }

    /// Physical effects spanning `Eff_R(s)`.
    pub fn spanning_effects(&self, s: &SystemType) -> Result<Vec<EffectVector>, TheoryError> {
        match self.kind {
            BackendKind::Classical => Ok(self
                .spanning_states(s)?
                .into_iter()
                .map(|st| EffectVector::new(s.clone(), st.coords))
                .collect()),
            BackendKind::Quantum if s.len() > 1 => {
                let mut acc = vec![DVector::from_element(1, 1.0)];
                for label in s.labels() {
                    let part = self.spanning_effects(&SystemType::primitive(label.clone()))?;
                    acc = acc
                        .iter()
                        .flat_map(|a| part.iter().map(move |p| a.kronecker(&p.coords)))
                        .collect();
                }
                Ok(acc.into_iter().map(|v| EffectVector::new(s.clone(), v)).collect())
            }
            _ => {
                let d = self.total_dim(s)?;
                self.spanning_kets(d)
                    .iter()
                    .map(|k| self.effect_from_operator(s, &(k * k.adjoint())))
                    .collect()
            }
        }
    }
}

fn expect_shape(what: &'static str, m: &CMatrix, n: usize) -> Result<(), TheoryError> {
    if m.shape() != (n, n) {
        return Err(TheoryError::Shape {
            what,
            expected: (n, n),
            found: m.shape(),
        });
    }
    Ok(())
}

fn reject(cert: PhysicalityCertificate) -> Result<(), TheoryError> {
    match cert {
        PhysicalityCertificate::Physical => Ok(()),
        PhysicalityCertificate::NotPhysical(v) => Err(TheoryError::NotPhysical(v)),
    }
}

/// `Σ_k |K_k⟩⟩⟨⟨K_k|` with `|K⟩⟩ = Σ_i |i⟩ ⊗ K|i⟩`.
pub fn kraus_to_choi(kraus: &[CMatrix]) -> CMatrix {
    let (dout, di) = kraus[0].shape();
    let mut choi = CMatrix::zeros(di * dout, di * dout);
    for k in kraus {
        let v = CVector::from_fn(di * dout, |idx, _| k[(idx % dout, idx / dout)]);
        choi += &v * v.adjoint();
    }
    choi
}

/// Kraus operator whose vectorization `Σ_i |i⟩ ⊗ K|i⟩` is `v`.
pub fn kraus_from_vector(v: &CVector, di: usize, dout: usize) -> CMatrix {
    CMatrix::from_fn(dout, di, |b, a| v[a * dout + b])
}
