//! Dense complex linear algebra used by the diagnostics and by test oracles.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::C64;

pub type CMatrix = DMatrix<C64>;

pub fn matvec(m: &CMatrix, x: &[C64], y: &mut [C64]) {
    let n = m.nrows();
    for (i, yi) in y.iter_mut().enumerate().take(n) {
        let mut acc = C64::new(0.0, 0.0);
        for (j, xj) in x.iter().enumerate() {
            acc += m[(i, j)] * xj;
        }
        *yi = acc;
    }
}

/// Dense matrix of a linear map on `C^n`, assembled column by column.
pub fn assemble<F>(n: usize, mut apply: F) -> CMatrix
where
    F: FnMut(&[C64], &mut [C64]),
{
    let mut m = CMatrix::zeros(n, n);
    let mut e = vec![C64::new(0.0, 0.0); n];
    let mut col = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        e[j] = C64::new(1.0, 0.0);
        apply(&e, &mut col);
        for i in 0..n {
            m[(i, j)] = col[i];
        }
        e[j] = C64::new(0.0, 0.0);
    }
    m
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `f(H)` for Hermitian `H` through its spectral decomposition.
pub fn hermitian_function<F: Fn(f64) -> C64>(m: &CMatrix, f: F) -> CMatrix {
    let (vals, vecs) = eigh(m);
    let n = m.nrows();
    let mut scaled = vecs.clone();
    for (c, lam) in vals.iter().enumerate() {
        let fl = f(*lam);
        for r in 0..n {
            scaled[(r, c)] *= fl;
        }
    }
    scaled * vecs.adjoint()
}

/// `exp(-i H t)` by eigendecomposition.
pub fn expm_hermitian(m: &CMatrix, t: f64) -> CMatrix {
    hermitian_function(m, |lam| C64::from_polar(1.0, -lam * t))
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    singular_values(m).iter().sum()
}

/// Trace norm of a Hermitian matrix as the sum of absolute eigenvalues.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    eigvalsh(m).iter().map(|x| x.abs()).sum()
}

pub fn hs_norm(m: &CMatrix) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn op_norm(m: &CMatrix) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

pub fn trace(m: &CMatrix) -> C64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |r, c| a[(r / br, c / bc)] * b[(r % br, c % bc)])
}

/// `(I x .. x A x .. x I) x` with `A` on factor `factor` of `nfactors`
/// equal factors (first factor most significant).
pub fn apply_on_factor(a: &CMatrix, x: &[C64], factor: usize, nfactors: usize) -> Vec<C64> {
    let s = a.nrows();
    let inner = s.pow((nfactors - 1 - factor) as u32);
    let block = inner * s;
    let mut y = vec![C64::new(0.0, 0.0); x.len()];
    for (xb, yb) in x.chunks(block).zip(y.chunks_mut(block)) {
        for r in 0..s {
            let yr = &mut yb[r * inner..(r + 1) * inner];
            for c in 0..s {
                let arc = a[(r, c)];
                if arc == C64::new(0.0, 0.0) {
                    continue;
                }
                for (yi, xi) in yr.iter_mut().zip(&xb[c * inner..(c + 1) * inner]) {
                    *yi += arc * xi;
                }
            }
        }
    }
    y
}

/// Partial trace of `rho` acting on `C^{d_1} x ... x C^{d_m}` (first factor
/// most significant) over every factor with `keep[i] == false`.
pub fn partial_trace(rho: &CMatrix, dims: &[usize], keep: &[bool]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if rho.nrows() != total || rho.ncols() != total || keep.len() != dims.len() {
        return Err(Error::Factorization {
            dim: rho.nrows(),
            factors: dims.to_vec(),
        });
    }
    let kept: usize = dims.iter().zip(keep).filter(|(_, &k)| k).map(|(d, _)| d).product();
    let traced = total / kept;
    // strides of every factor in the full index
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let split = |kidx: usize, tidx: usize| -> usize {
        let (mut k, mut t, mut full) = (kidx, tidx, 0usize);
        for i in (0..dims.len()).rev() {
            let digit = if keep[i] {
                let d = k % dims[i];
                k /= dims[i];
                d
            } else {
                let d = t % dims[i];
                t /= dims[i];
                d
            };
            full += digit * strides[i];
        }
        full
    };
    let mut out = CMatrix::zeros(kept, kept);
    for a in 0..kept {
        for b in 0..kept {
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..traced {
                acc += rho[(split(a, t), split(b, t))];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}
