//! Dense helpers over `nalgebra` used by the backends and audits.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;
pub type CVector = DVector<Complex64>;

/// Relative eigenvalue cutoff for rank decisions.
pub const RANK_CUTOFF: f64 = 1e-9;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

pub fn max_abs_r(m: &RMatrix) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_c(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.norm()))
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Hermitian eigendecomposition with eigenvalues sorted descending and each
/// eigenvector's first non-negligible component made real positive.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, Vec<CVector>) {
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| fix_phase(&eig.eigenvectors.column(i).into_owned()))
        .collect();
    (values, vectors)
}

pub fn eigenvalues_desc(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    eigenvalues_desc(m).last().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &CMatrix) -> f64 {
    eigenvalues_desc(m).first().copied().unwrap_or(0.0)
}

/// Number of eigenvalues above `RANK_CUTOFF` times the largest one.
pub fn numerical_rank(values_desc: &[f64]) -> usize {
    let top = values_desc.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    values_desc.iter().filter(|&&v| v > RANK_CUTOFF * top).count()
}

/// Rank from singular values with the same relative cutoff.
pub fn matrix_rank(m: &RMatrix) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let mut v: Vec<f64> = sv.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    numerical_rank(&v)
}

pub fn fix_phase(v: &CVector) -> CVector {
    let scale = v.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let Some(lead) = v.iter().find(|z| z.norm() > 1e-12 * scale.max(1e-300)) else {
        return v.clone();
    };
    let phase = lead.conj() / lead.norm();
    v.map(|z| z * phase)
}

pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Partial trace of an operator on `⊗ dims`, keeping the factors whose flag is set.
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[bool]) -> CMatrix {
    assert_eq!(dims.len(), keep.len());
    let total: usize = dims.iter().product();
    assert_eq!(m.nrows(), total);
    let kept_dim: usize = dims.iter().zip(keep).filter(|(_, &k)| k).map(|(d, _)| d).product();
    let mut out = CMatrix::zeros(kept_dim, kept_dim);
    let digits = |mut idx: usize| {
        let mut ds = vec![0usize; dims.len()];
        for p in (0..dims.len()).rev() {
            ds[p] = idx % dims[p];
            idx /= dims[p];
        }
        ds
    };
    let split = |ds: &[usize]| {
        let mut kept = 0usize;
        let mut traced = 0usize;
        for (p, &d) in ds.iter().enumerate() {
            if keep[p] {
                kept = kept * dims[p] + d;
            } else {
                traced = traced * dims[p] + d;
            }
        }
        (kept, traced)
    };
    let parts: Vec<(usize, usize)> = (0..total).map(|i| split(&digits(i))).collect();
    for i in 0..total {
        let (ki, ti) = parts[i];
        for j in 0..total {
            let (kj, tj) = parts[j];
            if ti == tj {
                out[(ki, kj)] += m[(i, j)];
            }
        }
    }
    out
}

/// `A^{-1/2}` on the support of a PSD matrix together with the support projector.
pub fn inverse_sqrt_on_support(m: &CMatrix) -> (CMatrix, CMatrix) {
    let (vals, vecs) = eigh(m);
    let r = numerical_rank(&vals);
    let n = m.nrows();
    let mut inv = CMatrix::zeros(n, n);
    let mut proj = CMatrix::zeros(n, n);
    for i in 0..r {
        let o = outer(&vecs[i], &vecs[i]);
        inv += o.scale(1.0 / vals[i].sqrt());
        proj += o;
    }
    (inv, proj)
}

pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh(m);
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (v, u) in vals.iter().zip(&vecs) {
        if *v > 0.0 {
            out += outer(u, u).scale(v.sqrt());
        }
    }
    out
}

/// Unitary factor `U V†` of the SVD `X = U Σ V†`.
pub fn unitary_polar(x: &CMatrix) -> CMatrix {
    let svd = x.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    u * vt
}

/// Real orthogonal polar factor, for real inputs.
pub fn orthogonal_polar(x: &RMatrix) -> RMatrix {
    let svd = x.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    u * vt
}

pub fn is_real(m: &CMatrix, tol: f64) -> bool {
    m.iter().all(|z| z.im.abs() <= tol)
}

pub fn real_part(m: &CMatrix) -> RMatrix {
    m.map(|z| z.re)
}

/// [`eigh`] carried out in real arithmetic when `real` is set, so real inputs
/// keep real eigenvectors even inside degenerate eigenspaces.
pub fn eigh_in(m: &CMatrix, real: bool) -> (Vec<f64>, Vec<CVector>) {
    if !real {
        return eigh(m);
    }
    let r = real_part(&hermitian_part(m));
    let eig = r.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| fix_phase(&eig.eigenvectors.column(i).map(|x| c(x, 0.0))))
        .collect();
    (values, vectors)
}

/// [`unitary_polar`], or [`orthogonal_polar`] on the real part when `real` is set.
pub fn polar_in(x: &CMatrix, real: bool) -> CMatrix {
    if real {
        to_complex(&orthogonal_polar(&real_part(x)))
    } else {
        unitary_polar(x)
    }
}
