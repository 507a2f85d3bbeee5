//! Canonical operator bases for the operator backends.
//!
//! For a primitive system of Hilbert dimension `d` the dual basis is, in order,
//!
//! 1. the identity `I`;
//! 2. symmetric off-diagonals `|j⟩⟨k| + |k⟩⟨j|` for `j < k` (lexicographic);
//! 3. antisymmetric off-diagonals for `j < k`: `-i|j⟩⟨k| + i|k⟩⟨j|` in the complex
//!    backend, the real matrix `|j⟩⟨k| - |k⟩⟨j|` in the real backend;
//! 4. diagonals `sqrt(2/(l(l+1))) (Σ_{m<l} |m⟩⟨m| - l|l⟩⟨l|)` for `l = 1..d-1`.
//!
//! For `d = 2` this is `(I, X, Y, Z)`. Coordinates of an operator `X` are
//! `c_k = Tr(F_k† X)`, so `c_0` is the trace and the remaining entries are the
//! generalized Bloch components. The expansion frame is `Ξ_0 = I/d`, `Ξ_k = F_k/2`.
//! Composite systems use Kronecker products of the primitive bases with the
//! leftmost label varying slowest.

use crate::linalg::{c, CMatrix, CVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Complex,
    Real,
}

/// One primitive basis element with its normalization `Tr(F† F)`.
#[derive(Clone, Debug)]
pub(crate) struct Element {
    pub op: CMatrix,
    pub norm: f64,
    pub antisymmetric: bool,
}

pub(crate) fn primitive_basis(d: usize, field: Field) -> Vec<Element> {
    let zero = c(0.0, 0.0);
    let mut out = Vec::with_capacity(d * d);
    out.push(Element {
        op: CMatrix::identity(d, d),
        norm: d as f64,
        antisymmetric: false,
    });
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = CMatrix::from_element(d, d, zero);
            m[(j, k)] = c(1.0, 0.0);
            m[(k, j)] = c(1.0, 0.0);
            out.push(Element {
                op: m,
                norm: 2.0,
                antisymmetric: false,
            });
        }
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = CMatrix::from_element(d, d, zero);
            match field {
                Field::Complex => {
                    m[(j, k)] = c(0.0, -1.0);
                    m[(k, j)] = c(0.0, 1.0);
                }
                Field::Real => {
                    m[(j, k)] = c(1.0, 0.0);
                    m[(k, j)] = c(-1.0, 0.0);
                }
            }
            out.push(Element {
                op: m,
                norm: 2.0,
                antisymmetric: field == Field::Real,
            });
        }
    }
    for l in 1..d {
        let s = (2.0 / (l as f64 * (l as f64 + 1.0))).sqrt();
        let mut m = CMatrix::from_element(d, d, zero);
        for mm in 0..l {
            m[(mm, mm)] = c(s, 0.0);
        }
        m[(l, l)] = c(-(l as f64) * s, 0.0);
        out.push(Element {
            op: m,
            norm: 2.0,
            antisymmetric: false,
        });
    }
    out
}

/// Product basis for a word of primitive dimensions, as analysis/synthesis matrices.
///
/// With row-major `vec`, `coords = analysis · vec(X)` and `vec(X) = synthesis · coords`.
#[derive(Clone, Debug)]
pub struct OperatorBasis {
    hilbert_dim: usize,
    analysis: CMatrix,
    synthesis: CMatrix,
    symmetric: Vec<bool>,
}

impl OperatorBasis {
    pub fn new(dims: &[usize], field: Field) -> Self {
        let mut elems = vec![Element {
            op: CMatrix::identity(1, 1),
            norm: 1.0,
            antisymmetric: false,
        }];
        let mut parity = vec![false];
        for &d in dims {
            let prim = primitive_basis(d, field);
            let mut next = Vec::with_capacity(elems.len() * prim.len());
            let mut next_parity = Vec::with_capacity(elems.len() * prim.len());
            for (e, &p) in elems.iter().zip(&parity) {
                for f in &prim {
                    next.push(Element {
                        op: e.op.kronecker(&f.op),
                        norm: e.norm * f.norm,
                        antisymmetric: false,
                    });
                    next_parity.push(p ^ f.antisymmetric);
                }
            }
            elems = next;
            parity = next_parity;
        }
        let hilbert_dim: usize = dims.iter().product();
        let n = elems.len();
        let sq = hilbert_dim * hilbert_dim;
        let mut analysis = CMatrix::zeros(n, sq);
        let mut synthesis = CMatrix::zeros(sq, n);
        for (k, e) in elems.iter().enumerate() {
            for i in 0..hilbert_dim {
                for j in 0..hilbert_dim {
                    let z = e.op[(i, j)];
                    analysis[(k, i * hilbert_dim + j)] = z.conj();
                    synthesis[(i * hilbert_dim + j, k)] = z / e.norm;
                }
            }
        }
        Self {
            hilbert_dim,
            analysis,
            synthesis,
            symmetric: parity.into_iter().map(|odd| !odd).collect(),
        }
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn len(&self) -> usize {
        self.analysis.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn analysis(&self) -> &CMatrix {
        &self.analysis
    }

    pub(crate) fn synthesis(&self) -> &CMatrix {
        &self.synthesis
    }

    /// Indices of elements that are symmetric matrices (all of them in the complex field).
    pub fn symmetric_indices(&self) -> Vec<usize> {
        self.symmetric
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn coords(&self, x: &CMatrix) -> CVector {
        &self.analysis * vectorize(x)
    }

    pub fn expand(&self, coords: &CVector) -> CMatrix {
        unvectorize(&(&self.synthesis * coords), self.hilbert_dim)
    }

    /// Pairing coordinates `e_k = Tr(E Ξ_k)` of an effect operator.
    pub fn effect_coords(&self, e: &CMatrix) -> CVector {
        // Tr(E Ξ_k) = Σ_ij E_ji Ξ_k[i,j] = (synthesisᵀ vec(Eᵀ))_k
        self.synthesis.transpose() * vectorize(&e.transpose())
    }

    /// Inverse of [`OperatorBasis::effect_coords`].
    pub fn effect_operator(&self, coords: &CVector) -> CMatrix {
        // E = Σ_k e_k F_k† ... expressed through the analysis rows: vec(Eᵀ) = analysisᵀ e
        let v = self.analysis.transpose() * coords;
        unvectorize(&v, self.hilbert_dim).transpose()
    }
}

pub(crate) fn vectorize(x: &CMatrix) -> CVector {
    let cols = x.ncols();
    CVector::from_fn(x.nrows() * cols, |k, _| x[(k / cols, k % cols)])
}

pub(crate) fn unvectorize(v: &CVector, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| v[i * d + j])
}
