//! Dense complex tensors.
//!
//! Data is stored row-major: the last index runs fastest. Reshapes that keep
//! the element order are free; anything else goes through [`Tensor::permute`].

use std::borrow::Cow;
use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<C64>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("dims", &self.dims)
            .field("len", &self.data.len())
            .finish()
    }
}

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::Shape("tensor rank must be at least 1".into()));
    }
    if let Some(pos) = dims.iter().position(|&d| d == 0) {
        return Err(Error::Shape(format!("dimension {pos} is zero in {dims:?}")));
    }
    Ok(dims.iter().product())
}

impl Tensor {
    pub fn zeros(dims: &[usize]) -> Self {
        let len = check_dims(dims).expect("invalid tensor dimensions");
        Self {
            dims: dims.to_vec(),
            data: vec![C64::new(0.0, 0.0); len],
        }
    }

    pub fn from_vec(dims: &[usize], data: Vec<C64>) -> Result<Self> {
        let len = check_dims(dims)?;
        if len != data.len() {
            return Err(Error::Shape(format!(
                "dims {dims:?} need {len} elements, got {}",
                data.len()
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn from_real(dims: &[usize], data: &[f64]) -> Result<Self> {
        Self::from_vec(dims, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Rank-1 tensor of length one holding `value`.
    pub fn scalar(value: C64) -> Self {
        Self {
            dims: vec![1],
            data: vec![value],
        }
    }

    pub fn eye(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = C64::new(1.0, 0.0);
        }
        t
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dims.len());
        index
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| {
                debug_assert!(i < d);
                acc * d + i
            })
    }

    pub fn get(&self, index: &[usize]) -> C64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: C64) {
        let o = self.offset(index);
        self.data[o] = value;
    }

    /// Reinterprets the data with new dimensions. Row-major order is kept, so this is O(1).
    pub fn reshape(mut self, dims: &[usize]) -> Result<Self> {
        let len = check_dims(dims)?;
        if len != self.data.len() {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} into {dims:?}",
                self.dims
            )));
        }
        self.dims = dims.to_vec();
        Ok(self)
    }

    pub fn permute(&self, perm: &[usize]) -> Tensor {
        let rank = self.rank();
        assert_eq!(perm.len(), rank, "permutation length mismatch");
        let mut seen = vec![false; rank];
        for &p in perm {
            assert!(p < rank && !seen[p], "invalid permutation {perm:?}");
            seen[p] = true;
        }
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return self.clone();
        }

        let mut in_strides = vec![1usize; rank];
        for k in (0..rank.saturating_sub(1)).rev() {
            in_strides[k] = in_strides[k + 1] * self.dims[k + 1];
        }
        let out_dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let src_strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();

        // the innermost output index is walked in a tight loop
        let inner = rank - 1;
        let inner_dim = out_dims[inner];
        let inner_stride = src_strides[inner];
        let mut data = Vec::with_capacity(self.data.len());
        let mut counter = vec![0usize; rank];
        let mut base = 0usize;
        loop {
            let mut src = base;
            for _ in 0..inner_dim {
                data.push(self.data[src]);
                src += inner_stride;
            }
            // advance the outer multi-index
            let mut k = inner;
            loop {
                if k == 0 {
                    return Tensor {
                        dims: out_dims,
                        data,
                    };
                }
                k -= 1;
                counter[k] += 1;
                base += src_strides[k];
                if counter[k] < out_dims[k] {
                    break;
                }
                base -= src_strides[k] * out_dims[k];
                counter[k] = 0;
            }
        }
    }

    pub fn conj(&self) -> Tensor {
        Tensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        dotc(&self.data, &self.data).re
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Inner product `Σ conj(self) · other` over all elements.
    pub fn inner(&self, other: &Tensor) -> C64 {
        assert_eq!(self.dims, other.dims, "inner product of mismatched tensors");
        dotc(&self.data, &other.data)
    }

    pub fn scale(&mut self, s: C64) {
        self.data.iter_mut().for_each(|z| *z *= s);
    }

    pub fn scaled(mut self, s: C64) -> Tensor {
        self.scale(s);
        self
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: C64, other: &Tensor) {
        assert_eq!(self.dims, other.dims, "axpy of mismatched tensors");
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += s * b);
    }

    pub fn rows(&self) -> usize {
        assert_eq!(self.rank(), 2, "not a matrix");
        self.dims[0]
    }

    pub fn cols(&self) -> usize {
        assert_eq!(self.rank(), 2, "not a matrix");
        self.dims[1]
    }

    /// Conjugate transpose of a matrix.
    pub fn adjoint(&self) -> Tensor {
        self.permute(&[1, 0]).conj()
    }

    /// Matrix product of two rank-2 tensors.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.rank() != 2 || other.rank() != 2 {
            return Err(Error::Shape("matmul needs two matrices".into()));
        }
        let (m, k) = (self.dims[0], self.dims[1]);
        let (k2, n) = (other.dims[0], other.dims[1]);
        if k != k2 {
            return Err(Error::Contraction {
                left: 1,
                right: 0,
                left_dim: k,
                right_dim: k2,
            });
        }
        Ok(Tensor {
            dims: vec![m, n],
            data: product(m, k, n, &self.data, &other.data),
        })
    }

    /// Copies `self` into the leading corner of a zero tensor of the (elementwise larger) shape `dims`.
    pub fn padded(&self, dims: &[usize]) -> Tensor {
        assert_eq!(dims.len(), self.rank(), "padding changes rank");
        assert!(
            dims.iter().zip(&self.dims).all(|(n, o)| n >= o),
            "padding must not shrink"
        );
        if dims == self.dims.as_slice() {
            return self.clone();
        }
        let mut out = Tensor::zeros(dims);
        let inner_old = *self.dims.last().unwrap();
        let inner_new = *dims.last().unwrap();
        let outer_old = self.data.len() / inner_old;
        let outer_dims = &self.dims[..self.rank() - 1];
        let mut idx = vec![0usize; outer_dims.len()];
        for row in 0..outer_old {
            let mut dst = 0usize;
            for (k, &i) in idx.iter().enumerate() {
                dst = dst * dims[k] + i;
            }
            dst *= inner_new;
            out.data[dst..dst + inner_old]
                .copy_from_slice(&self.data[row * inner_old..(row + 1) * inner_old]);
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                if idx[k] < outer_dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        out
    }

    /// Restricts every index `k` to its first `dims[k]` values.
    pub fn truncated(&self, dims: &[usize]) -> Tensor {
        assert_eq!(dims.len(), self.rank(), "truncation changes rank");
        assert!(
            dims.iter().zip(&self.dims).all(|(n, o)| n <= o && *n > 0),
            "truncation must not grow"
        );
        let mut out = Tensor::zeros(dims);
        let inner_new = *dims.last().unwrap();
        let inner_old = *self.dims.last().unwrap();
        let outer_dims = &dims[..dims.len() - 1];
        let outer_new: usize = outer_dims.iter().product();
        let mut idx = vec![0usize; outer_dims.len()];
        for row in 0..outer_new {
            let mut src = 0usize;
            for (k, &i) in idx.iter().enumerate() {
                src = src * self.dims[k] + i;
            }
            src *= inner_old;
            out.data[row * inner_new..(row + 1) * inner_new]
                .copy_from_slice(&self.data[src..src + inner_new]);
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                if idx[k] < outer_dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        out
    }
}

/// `Σ conj(x_i) y_i` with independent partial sums, which lets the loop pipeline.
pub(crate) fn dotc(x: &[C64], y: &[C64]) -> C64 {
    let zero = C64::new(0.0, 0.0);
    let mut acc = [zero; 4];
    let (xc, yc) = (x.chunks_exact(4), y.chunks_exact(4));
    let mut tail = zero;
    for (a, b) in xc.remainder().iter().zip(yc.remainder()) {
        tail += a.conj() * b;
    }
    for (a, b) in xc.zip(yc) {
        for l in 0..4 {
            acc[l] += a[l].conj() * b[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Writes `a · b` for row-major `a: m×k`, `b: k×n` to `m·n` elements at `c` without reading them.
///
/// # Safety
/// `c` must be valid for `m·n` writes, and `a`, `b` must hold `m·k` and `k·n` elements.
unsafe fn gemm_raw(m: usize, k: usize, n: usize, a: &[C64], b: &[C64], c: *mut C64) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for i in 0..m * n {
            c.add(i).write(C64::new(0.0, 0.0));
        }
        return;
    }
    // Complex64 and gemm's c64 are both repr(C) {re, im}
    gemm::gemm(
        m,
        n,
        k,
        c as *mut gemm::c64,
        1,
        n as isize,
        false,
        a.as_ptr() as *const gemm::c64,
        1,
        k as isize,
        b.as_ptr() as *const gemm::c64,
        1,
        n as isize,
        gemm::c64::new(0.0, 0.0),
        gemm::c64::new(1.0, 0.0),
        false,
        false,
        false,
        gemm::Parallelism::None,
    );
}

/// `c = a · b` for row-major `a: m×k`, `b: k×n`, `c: m×n`.
pub(crate) fn gemm(m: usize, k: usize, n: usize, a: &[C64], b: &[C64], c: &mut [C64]) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    // SAFETY: the slice lengths were checked above
    unsafe { gemm_raw(m, k, n, a, b, c.as_mut_ptr()) }
}

/// `a · b` in a fresh buffer, skipping the zero fill of the output.
pub(crate) fn product(m: usize, k: usize, n: usize, a: &[C64], b: &[C64]) -> Vec<C64> {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    let mut c = Vec::with_capacity(m * n);
    // SAFETY: the capacity holds m·n elements and gemm_raw writes every one of them
    unsafe {
        gemm_raw(m, k, n, a, b, c.as_mut_ptr());
        c.set_len(m * n);
    }
    c
}

fn permuted<'a>(t: &'a Tensor, perm: &[usize]) -> Cow<'a, Tensor> {
    if perm.iter().enumerate().all(|(k, &p)| k == p) {
        Cow::Borrowed(t)
    } else {
        Cow::Owned(t.permute(perm))
    }
}

/// Contracts `a` and `b` over the index pairs `(index of a, index of b)`.
///
/// The result carries the unpaired indices of `a` (in order) followed by the
/// unpaired indices of `b`. A contraction over every index yields a
/// length-one rank-1 tensor.
pub fn contract(a: &Tensor, b: &Tensor, pairs: &[(usize, usize)]) -> Result<Tensor> {
    let mut used_a = vec![false; a.rank()];
    let mut used_b = vec![false; b.rank()];
    for &(ia, ib) in pairs {
        if ia >= a.rank() || ib >= b.rank() {
            return Err(Error::Shape(format!(
                "index pair ({ia}, {ib}) out of range for ranks {} and {}",
                a.rank(),
                b.rank()
            )));
        }
        if used_a[ia] || used_b[ib] {
            return Err(Error::Shape(format!("index pair ({ia}, {ib}) repeats an index")));
        }
        if a.dims[ia] != b.dims[ib] {
            return Err(Error::Contraction {
                left: ia,
                right: ib,
                left_dim: a.dims[ia],
                right_dim: b.dims[ib],
            });
        }
        used_a[ia] = true;
        used_b[ib] = true;
    }

    let free_a: Vec<usize> = (0..a.rank()).filter(|&k| !used_a[k]).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|&k| !used_b[k]).collect();

    let perm_a: Vec<usize> = free_a
        .iter()
        .copied()
        .chain(pairs.iter().map(|p| p.0))
        .collect();
    let perm_b: Vec<usize> = pairs
        .iter()
        .map(|p| p.1)
        .chain(free_b.iter().copied())
        .collect();

    let m: usize = free_a.iter().map(|&k| a.dims[k]).product();
    let kk: usize = pairs.iter().map(|p| a.dims[p.0]).product();
    let n: usize = free_b.iter().map(|&k| b.dims[k]).product();

    let ap = permuted(a, &perm_a);
    let bp = permuted(b, &perm_b);
    let mut dims: Vec<usize> = free_a
        .iter()
        .map(|&k| a.dims[k])
        .chain(free_b.iter().map(|&k| b.dims[k]))
        .collect();
    if dims.is_empty() {
        dims.push(1);
    }
    Ok(Tensor {
        dims,
        data: product(m, kk, n, &ap.data, &bp.data),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn ramp(dims: &[usize]) -> Tensor {
        let n: usize = dims.iter().product();
        Tensor::from_vec(
            dims,
            (0..n).map(|k| c(k as f64, 0.5 * k as f64 - 1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_acts_trivially() {
        let v = Tensor::from_real(&[2], &[1.0, 0.0]).unwrap();
        let r = contract(&Tensor::eye(2), &v, &[(1, 0)]).unwrap();
        assert_eq!(r.dims(), &[2]);
        assert_eq!(r.data(), &[c(1.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn no_pairs_is_outer_product() {
        let v = Tensor::from_real(&[2], &[1.0, 2.0]).unwrap();
        let w = Tensor::from_real(&[1], &[3.0]).unwrap();
        let r = contract(&v, &w, &[]).unwrap();
        assert_eq!(r.dims(), &[2, 1]);
        assert_eq!(r.data(), &[c(3.0, 0.0), c(6.0, 0.0)]);
    }

    #[test]
    fn full_contraction_with_conjugate() {
        let a = Tensor::from_vec(&[2], vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let r = contract(&a, &a.conj(), &[(0, 0)]).unwrap();
        assert_eq!(r.dims(), &[1]);
        assert!((r.data()[0] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn mismatched_pair_is_rejected() {
        let a = Tensor::zeros(&[2, 3]);
        let b = Tensor::zeros(&[2, 3]);
        assert!(matches!(
            contract(&a, &b, &[(1, 0)]),
            Err(Error::Contraction { .. })
        ));
    }

    #[test]
    fn permute_matches_index_map() {
        let t = ramp(&[2, 3, 4]);
        let p = t.permute(&[2, 0, 1]);
        assert_eq!(p.dims(), &[4, 2, 3]);
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..4 {
                    assert_eq!(p.get(&[k, i, j]), t.get(&[i, j, k]));
                }
            }
        }
    }

    #[test]
    fn pad_then_truncate_round_trips() {
        let t = ramp(&[2, 3, 2]);
        let p = t.padded(&[3, 3, 4]);
        assert_eq!(p.norm_sqr(), t.norm_sqr());
        assert_eq!(p.get(&[1, 2, 1]), t.get(&[1, 2, 1]));
        assert_eq!(p.truncated(&[2, 3, 2]), t);
    }

    #[test]
    fn reshape_rejects_wrong_size() {
        assert!(ramp(&[2, 3]).reshape(&[4]).is_err());
        assert!(Tensor::from_vec(&[2, 0], vec![]).is_err());
    }
}
