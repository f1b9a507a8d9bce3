//! Lanczos approximation of `exp(-i H t) v` for Hermitian operators given
//! only through their action on vectors.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LanczosConfig {
    /// Maximum Krylov dimension.
    pub krylov_dim: usize,
    /// Relative a-posteriori error tolerance per application.
    pub tol: f64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            krylov_dim: 20,
            tol: 1e-10,
        }
    }
}

/// First column of `exp(-i T dt)` for the symmetric tridiagonal `T` with
/// diagonal `alpha` and off-diagonal `beta`.
fn tridiag_expm_first_column(alpha: &[f64], beta: &[f64], dt: f64) -> Vec<C64> {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    (0..m)
        .map(|i| {
            (0..m).fold(C64::new(0.0, 0.0), |acc, k| {
                let q = eig.eigenvectors[(i, k)] * eig.eigenvectors[(0, k)];
                acc + C64::from_polar(q, -eig.eigenvalues[k] * dt)
            })
        })
        .collect()
}

struct Lanczos {
    basis: Vec<Vec<C64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

fn orthogonalize(w: &mut [C64], basis: &[Vec<C64>]) {
    // two passes of classical Gram-Schmidt keep the basis orthonormal to
    // working precision at the small dimensions used here
    for _ in 0..2 {
        for b in basis {
            let c = par::dot(b, w);
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= c * bi;
            }
        }
    }
}

/// `exp(-i H dt) v` where `apply(x, y)` writes `H x` into `y`.
///
/// The recursion stops once the standard a-posteriori estimate
/// `|v| beta_{m+1} |[exp(-i T_m dt)]_{m,1}|` falls below `tol |v|`, or on a
/// happy breakdown. Failing that at `krylov_dim` is an error.
pub fn expm_apply<F>(mut apply: F, v: &[C64], dt: f64, cfg: &LanczosConfig) -> Result<Vec<C64>>
where
    F: FnMut(&[C64], &mut [C64]),
{
    let n = v.len();
    let norm_v = par::norm_sqr(v).sqrt();
    if dt == 0.0 || norm_v == 0.0 {
        return Ok(v.to_vec());
    }
    if !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("time step {dt}")));
    }
    let max_dim = cfg.krylov_dim.max(1).min(n);
    let mut lz = Lanczos {
        basis: vec![v.iter().map(|x| x / norm_v).collect()],
        alpha: Vec::with_capacity(max_dim),
        beta: Vec::with_capacity(max_dim),
    };
    let mut w = vec![C64::new(0.0, 0.0); n];
    loop {
        let j = lz.alpha.len();
        apply(&lz.basis[j], &mut w);
        let a = par::dot(&lz.basis[j], &w).re;
        lz.alpha.push(a);
        orthogonalize(&mut w, &lz.basis);
        let b = par::norm_sqr(&w).sqrt();
        let coef = tridiag_expm_first_column(&lz.alpha, &lz.beta, dt);
        let scale = lz.alpha.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let breakdown = b <= 1e-14 * scale || j + 1 == n;
        let err = b * coef[j].norm();
        if breakdown || err <= cfg.tol {
            let mut out = vec![C64::new(0.0, 0.0); n];
            for (c, q) in coef.iter().zip(&lz.basis) {
                let c = c * norm_v;
                for (o, qi) in out.iter_mut().zip(q) {
                    *o += c * qi;
                }
            }
            return Ok(out);
        }
        if j + 1 >= max_dim {
            return Err(Error::LanczosNoConvergence {
                residual: err,
                dim: max_dim,
            });
        }
        lz.beta.push(b);
        lz.basis.push(w.iter().map(|x| x / b).collect());
    }
}

/// `exp(-i H t) v` split into `ceil(t / max_step)` equal Lanczos steps.
pub fn expm_apply_stepped<F>(
    mut apply: F,
    v: &[C64],
    t: f64,
    max_step: f64,
    cfg: &LanczosConfig,
) -> Result<Vec<C64>>
where
    F: FnMut(&[C64], &mut [C64]),
{
    let steps = ((t.abs() / max_step).ceil() as usize).max(1);
    let dt = t / steps as f64;
    let mut out = v.to_vec();
    for _ in 0..steps {
        out = expm_apply(&mut apply, &out, dt, cfg)?;
    }
    Ok(out)
}

/// Smallest Ritz value of a Hermitian operator after `dim` Lanczos steps
/// from `v`. An upper estimate of the smallest eigenvalue.
pub fn lowest_ritz<F>(mut apply: F, v: &[C64], dim: usize) -> f64
where
    F: FnMut(&[C64], &mut [C64]),
{
    let n = v.len();
    let norm_v = par::norm_sqr(v).sqrt();
    let mut basis = vec![v.iter().map(|x| x / norm_v).collect::<Vec<_>>()];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut w = vec![C64::new(0.0, 0.0); n];
    for j in 0..dim.min(n) {
        apply(&basis[j], &mut w);
        alpha.push(par::dot(&basis[j], &w).re);
        orthogonalize(&mut w, &basis);
        let b = par::norm_sqr(&w).sqrt();
        if b <= 1e-13 || j + 1 == dim.min(n) {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    SymmetricEigen::new(t).eigenvalues.min()
}
