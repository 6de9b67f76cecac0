//! Lanczos approximation of `exp(z H) v` for Hermitian `H`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOptions {
    /// Bound on the estimated error of the result, relative to `‖v‖`.
    pub tol: f64,
    pub max_dim: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_dim: 30,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KrylovInfo {
    pub iterations: usize,
    pub residual: f64,
}

/// `exp(z T) e_1` for the real symmetric tridiagonal `T`.
fn tridiagonal_expm_e1(alpha: &[f64], beta: &[f64], z: C64) -> Vec<C64> {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DVector::<C64>::from_iterator(
        m,
        (0..m).map(|k| (z * eig.eigenvalues[k]).exp() * v[(0, k)]),
    );
    (0..m)
        .map(|i| (0..m).map(|k| phases[k] * v[(i, k)]).sum())
        .collect()
}

fn combine(basis: &[Tensor], coeffs: &[C64], scale: f64) -> Tensor {
    let mut out = Tensor::zeros(basis[0].dims());
    for (q, &c) in basis.iter().zip(coeffs) {
        out.axpy(c * scale, q);
    }
    out
}

/// Computes `exp(z H) v`, where `apply` realizes a Hermitian `H`.
///
/// Stops when the standard a-posteriori estimate `β_m |[exp(z T_m) e_1]_m|`
/// drops below `tol` or the Krylov space becomes invariant.
pub fn expm_apply<F>(apply: F, v: &Tensor, z: C64, opts: KrylovOptions) -> Result<(Tensor, KrylovInfo)>
where
    F: Fn(&Tensor) -> Result<Tensor>,
{
    let norm = v.norm();
    if norm == 0.0 {
        return Ok((v.clone(), KrylovInfo::default()));
    }
    let max_dim = opts.max_dim.max(1).min(v.len());
    let mut basis = vec![v.clone().scaled(C64::new(1.0 / norm, 0.0))];
    let mut alpha: Vec<f64> = Vec::with_capacity(max_dim);
    let mut beta: Vec<f64> = Vec::with_capacity(max_dim);
    let mut last_estimate;
    loop {
        let k = basis.len() - 1;
        let mut w = apply(&basis[k])?;
        let a = basis[k].inner(&w).re;
        alpha.push(a);
        w.axpy(C64::new(-a, 0.0), &basis[k]);
        if k > 0 {
            w.axpy(C64::new(-beta[k - 1], 0.0), &basis[k - 1]);
        }
        // full reorthogonalization, twice is enough
        for _ in 0..2 {
            for q in &basis {
                let c = q.inner(&w);
                w.axpy(-c, q);
            }
        }
        let b = w.norm();
        let scale = alpha
            .iter()
            .chain(beta.iter())
            .fold(f64::MIN_POSITIVE, |m, x| m.max(x.abs()));
        let coeffs = tridiagonal_expm_e1(&alpha, &beta, z);
        let m = alpha.len();
        let invariant = b <= 1e-14 * scale || m == v.len();
        let estimate = if invariant { 0.0 } else { b * coeffs[m - 1].norm() };
        if invariant || estimate <= opts.tol {
            let info = KrylovInfo {
                iterations: m,
                residual: estimate,
            };
            return Ok((combine(&basis, &coeffs, norm), info));
        }
        last_estimate = estimate;
        if m >= max_dim {
            break;
        }
        beta.push(b);
        basis.push(w.scaled(C64::new(1.0 / b, 0.0)));
    }
    Err(Error::KrylovNotConverged {
        iterations: alpha.len(),
        residual: last_estimate,
    })
}
