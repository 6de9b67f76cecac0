//! Dense reference implementations used to check the tensor-network code.
//!
//! Everything here works on full Hilbert-space matrices and is limited to
//! [`DENSE_DIM_CAP`] dimensions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{ChainCoefficients, Layout, ModelParams};
use crate::mpo::Mpo;
use crate::ops;
use crate::tensor::Tensor;

pub const DENSE_DIM_CAP: usize = 4096;

pub type Matrix = DMatrix<C64>;
pub type Vector = DVector<C64>;

fn check_cap(dim: usize) -> Result<()> {
    if dim > DENSE_DIM_CAP {
        return Err(Error::DimensionCap {
            dim,
            limit: DENSE_DIM_CAP,
        });
    }
    Ok(())
}

pub fn to_matrix(op: &Tensor) -> Matrix {
    assert_eq!(op.rank(), 2, "operator must be a matrix");
    Matrix::from_row_slice(op.rows(), op.cols(), op.data())
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// `1 ⊗ … ⊗ op ⊗ … ⊗ 1` with `op` on `site`; site 0 is the most significant factor.
pub fn embed(op: &Matrix, site: usize, dims: &[usize]) -> Result<Matrix> {
    embed_many(&[(site, op)], dims)
}

/// Tensor product of operators on distinct sites, identity elsewhere.
pub fn embed_many(ops: &[(usize, &Matrix)], dims: &[usize]) -> Result<Matrix> {
    check_cap(dims.iter().product())?;
    let mut out = Matrix::identity(1, 1);
    for (i, &d) in dims.iter().enumerate() {
        let factor = match ops.iter().find(|&&(s, _)| s == i) {
            Some(&(_, m)) => {
                if m.nrows() != d || m.ncols() != d {
                    return Err(Error::Shape(format!(
                        "operator of size {}x{} on site {i} of dimension {d}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                m.clone()
            }
            None => Matrix::identity(d, d),
        };
        out = kron(&out, &factor);
    }
    Ok(out)
}

/// Full contraction of an MPO into a matrix.
pub fn dense_from_mpo(mpo: &Mpo) -> Result<Matrix> {
    let dims = mpo.phys_dims();
    let dim: usize = dims.iter().product();
    check_cap(dim)?;
    // acc[row, col, w] over the sites seen so far
    let mut acc: Vec<C64> = vec![C64::new(1.0, 0.0)];
    let (mut rows, mut wdim) = (1usize, 1usize);
    for w in mpo.sites() {
        let (wl, d, _, wr) = (w.dims()[0], w.dims()[1], w.dims()[2], w.dims()[3]);
        debug_assert_eq!(wl, wdim);
        let new_rows = rows * d;
        let mut next = vec![C64::new(0.0, 0.0); new_rows * new_rows * wr];
        for r in 0..rows {
            for c in 0..rows {
                for a in 0..wl {
                    let v = acc[(r * rows + c) * wl + a];
                    if v == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for s in 0..d {
                        for t in 0..d {
                            for b in 0..wr {
                                let x = w.get(&[a, s, t, b]);
                                if x != C64::new(0.0, 0.0) {
                                    next[((r * d + s) * new_rows + c * d + t) * wr + b] += v * x;
                                }
                            }
                        }
                    }
                }
            }
        }
        acc = next;
        rows = new_rows;
        wdim = wr;
    }
    Ok(Matrix::from_row_slice(rows, rows, &acc))
}

/// Term-by-term assembly of the two-bath Hamiltonian from Kronecker products.
///
/// Deliberately shares no code with the MPO construction.
pub fn two_bath_dense(p: &ModelParams, a: &ChainCoefficients, b: &ChainCoefficients) -> Result<Matrix> {
    let lay: Layout = p.layout();
    let d = p.fock_dim;
    let dims = lay.phys_dims(d);
    let n: usize = dims.iter().product();
    check_cap(n)?;

    let mut annihilate = Matrix::zeros(d, d);
    for k in 1..d {
        annihilate[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    let create = annihilate.adjoint();
    let number = &create * &annihilate;
    let x = &annihilate + &create;
    let c = |re: f64| C64::new(re, 0.0);
    let sx = Matrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
    let sz = Matrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);

    let mut h = embed(&sz, lay.spin(), &dims)? * c(0.5 * p.omega0);
    let pos_a: Vec<usize> = (0..lay.len_a).map(|k| lay.site_a(k)).collect();
    let pos_b: Vec<usize> = (0..lay.len_b).map(|k| lay.site_b(k)).collect();
    for (coeffs, pos) in [(a, &pos_a), (b, &pos_b)] {
        h += embed_many(&[(lay.spin(), &sx), (pos[0], &x)], &dims)? * c(coeffs.coupling);
        for (k, &w) in coeffs.site_energies.iter().enumerate() {
            h += embed(&number, pos[k], &dims)? * c(w);
        }
        for (k, &t) in coeffs.hoppings.iter().enumerate() {
            let (i, j) = (pos[k], pos[k + 1]);
            h += embed_many(&[(i, &create), (j, &annihilate)], &dims)? * c(t);
            h += embed_many(&[(i, &annihilate), (j, &create)], &dims)? * c(t);
        }
    }
    Ok(h)
}

/// Product state `⊗_i v_i` as a dense vector, site 0 most significant.
pub fn product_vector(locals: &[Vec<C64>]) -> Vector {
    let mut out = vec![C64::new(1.0, 0.0)];
    for v in locals {
        let mut next = Vec::with_capacity(out.len() * v.len());
        for &a in &out {
            for &b in v {
                next.push(a * b);
            }
        }
        out = next;
    }
    Vector::from_vec(out)
}

pub fn expectation(op: &Matrix, psi: &Vector) -> C64 {
    psi.dotc(&(op * psi)) / psi.norm_squared()
}

pub fn hermiticity_error(h: &Matrix) -> f64 {
    (h - h.adjoint()).iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// `exp(z H) v` for Hermitian `H` through its eigendecomposition.
pub fn expm_apply(h: &Matrix, v: &Vector, z: C64) -> Vector {
    let eig = h.clone().symmetric_eigen();
    let coeffs = eig.eigenvectors.adjoint() * v;
    let phased = Vector::from_iterator(
        coeffs.len(),
        coeffs
            .iter()
            .zip(eig.eigenvalues.iter())
            .map(|(c, &l)| c * (z * l).exp()),
    );
    &eig.eigenvectors * phased
}

/// A small Hamiltonian together with an initial state.
#[derive(Clone, Debug)]
pub struct DenseSystem {
    pub hamiltonian: Matrix,
    pub state: Vector,
}

impl DenseSystem {
    pub fn new(hamiltonian: Matrix, state: Vector) -> Result<Self> {
        let n = hamiltonian.nrows();
        check_cap(n)?;
        if hamiltonian.ncols() != n || state.len() != n {
            return Err(Error::Shape("Hamiltonian and state sizes differ".into()));
        }
        let herm = hermiticity_error(&hamiltonian);
        let scale = hamiltonian.iter().fold(1.0f64, |m, z| m.max(z.norm()));
        if herm > 1e-12 * scale {
            return Err(Error::Validation(format!(
                "Hamiltonian is not Hermitian (deviation {herm:e})"
            )));
        }
        if (state.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Validation("initial state must have unit norm".into()));
        }
        Ok(Self { hamiltonian, state })
    }

    pub fn dim(&self) -> usize {
        self.state.len()
    }
}

/// States at `t = 0, dt, …, steps·dt`, each obtained exactly from the eigendecomposition.
pub fn ed_propagate(sys: &DenseSystem, dt: f64, steps: usize) -> Vec<Vector> {
    let eig = sys.hamiltonian.clone().symmetric_eigen();
    let coeffs = eig.eigenvectors.adjoint() * &sys.state;
    (0..=steps)
        .map(|k| {
            let t = k as f64 * dt;
            let phased = Vector::from_iterator(
                coeffs.len(),
                coeffs
                    .iter()
                    .zip(eig.eigenvalues.iter())
                    .map(|(c, &l)| c * C64::new(0.0, -l * t).exp()),
            );
            &eig.eigenvectors * phased
        })
        .collect()
}

/// Dense operators for the observables of the two-bath model.
#[derive(Clone, Debug)]
pub struct DenseObservables {
    pub sz: Matrix,
    pub sx: Matrix,
    pub sy: Matrix,
    pub flux_a: Matrix,
    pub flux_b: Matrix,
}

impl DenseObservables {
    pub fn new(p: &ModelParams) -> Result<Self> {
        let lay = p.layout();
        let dims = lay.phys_dims(p.fock_dim);
        let sy = to_matrix(&ops::sigma_y());
        let x = to_matrix(&ops::displacement(p.fock_dim));
        Ok(Self {
            sz: embed(&to_matrix(&ops::sigma_z()), lay.spin(), &dims)?,
            sx: embed(&to_matrix(&ops::sigma_x()), lay.spin(), &dims)?,
            sy: embed(&sy, lay.spin(), &dims)?,
            flux_a: embed_many(&[(lay.spin(), &sy), (lay.site_a(0), &x)], &dims)?,
            flux_b: embed_many(&[(lay.spin(), &sy), (lay.site_b(0), &x)], &dims)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_mpo_is_identity() {
        let m = dense_from_mpo(&Mpo::identity(&[2, 3]).unwrap()).unwrap();
        assert_eq!(m, Matrix::identity(6, 6));
    }

    #[test]
    fn single_site_field() {
        let w = ops::sigma_z().scaled(C64::new(0.1, 0.0)).reshape(&[1, 2, 2, 1]).unwrap();
        let m = dense_from_mpo(&Mpo::from_sites(vec![w]).unwrap()).unwrap();
        assert!((m[(0, 0)].re - 0.1).abs() < 1e-15);
        assert!((m[(1, 1)].re + 0.1).abs() < 1e-15);
        assert_eq!(m[(0, 1)], C64::new(0.0, 0.0));
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            dense_from_mpo(&Mpo::identity(&[2; 13]).unwrap()),
            Err(Error::DimensionCap { .. })
        ));
    }

    #[test]
    fn rabi_oscillation() {
        let sx = to_matrix(&ops::sigma_x());
        let sz = to_matrix(&ops::sigma_z());
        let sys = DenseSystem::new(sx, product_vector(&[ops::spin_up()])).unwrap();
        let traj = ed_propagate(&sys, 0.1, 30);
        for (k, psi) in traj.iter().enumerate() {
            let t = 0.1 * k as f64;
            assert!((expectation(&sz, psi).re - (2.0 * t).cos()).abs() < 1e-12);
            assert!((psi.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_hamiltonian_is_static() {
        let psi = product_vector(&[ops::spin_up(), ops::vacuum(3)]);
        let sys = DenseSystem::new(Matrix::zeros(6, 6), psi.clone()).unwrap();
        for s in ed_propagate(&sys, 0.3, 5) {
            assert!((s - &psi).norm() < 1e-15);
        }
    }

    #[test]
    fn half_steps_land_on_the_same_states() {
        let h = to_matrix(&ops::sigma_x()) + to_matrix(&ops::sigma_z()) * C64::new(0.3, 0.0);
        let sys = DenseSystem::new(h, product_vector(&[ops::spin_up()])).unwrap();
        let coarse = ed_propagate(&sys, 0.2, 10);
        let fine = ed_propagate(&sys, 0.1, 20);
        for k in 0..=10 {
            assert!((&coarse[k] - &fine[2 * k]).norm() <= 1e-12);
        }
    }
}
