//! Local operator matrices. The spin basis is `[|↑⟩, |↓⟩]`; boson bases are Fock states `|0⟩ … |d−1⟩`.

use num_complex::Complex64 as C64;

use crate::tensor::Tensor;

pub fn sigma_x() -> Tensor {
    Tensor::from_real(&[2, 2], &[0.0, 1.0, 1.0, 0.0]).unwrap()
}

pub fn sigma_y() -> Tensor {
    let z = C64::new(0.0, 0.0);
    Tensor::from_vec(&[2, 2], vec![z, C64::new(0.0, -1.0), C64::new(0.0, 1.0), z]).unwrap()
}

pub fn sigma_z() -> Tensor {
    Tensor::from_real(&[2, 2], &[1.0, 0.0, 0.0, -1.0]).unwrap()
}

pub fn spin_up() -> Vec<C64> {
    vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
}

/// Truncated annihilation operator, `a|n⟩ = √n |n−1⟩`.
pub fn annihilation(d: usize) -> Tensor {
    let mut a = Tensor::zeros(&[d, d]);
    for n in 1..d {
        a.set(&[n - 1, n], C64::new((n as f64).sqrt(), 0.0));
    }
    a
}

pub fn creation(d: usize) -> Tensor {
    annihilation(d).adjoint()
}

pub fn number(d: usize) -> Tensor {
    let mut n = Tensor::zeros(&[d, d]);
    for k in 0..d {
        n.set(&[k, k], C64::new(k as f64, 0.0));
    }
    n
}

/// `a + a†`
pub fn displacement(d: usize) -> Tensor {
    let mut x = annihilation(d);
    x.axpy(C64::new(1.0, 0.0), &creation(d));
    x
}

pub fn vacuum(d: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); d];
    v[0] = C64::new(1.0, 0.0);
    v
}
