//! Householder QR without pivoting.
//!
//! `Q` is a product of reflectors and therefore exactly orthonormal no matter
//! the rank of the input. The diagonal of `R` is made real and non-negative.
//! When a column is already reduced the reflector is the identity, so zero
//! columns appended to a matrix leave the earlier columns of the full `Q`
//! unchanged up to rounding.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::tensor::{dotc, gemm, Tensor};

/// Thin factorization `input = q · r`.
#[derive(Clone, Debug)]
pub struct QrPair {
    /// `m × k`, orthonormal columns.
    pub q: Tensor,
    /// `k × n`, upper triangular (trapezoidal when `k < n`).
    pub r: Tensor,
}

/// Full factorization `input = [q | q2] · [r; 0]`.
#[derive(Clone, Debug)]
pub struct FullQr {
    pub thin: QrPair,
    /// `m × (m − n)` orthonormal complement of `thin.q`; `None` when `m == n`.
    pub q2: Option<Tensor>,
}

impl FullQr {
    pub fn complement_dim(&self) -> usize {
        self.q2.as_ref().map_or(0, |q| q.cols())
    }
}

struct Householder {
    m: usize,
    n: usize,
    /// Reflector vectors, `vs[j]` spans rows `j..m` with `vs[j][0] == 1`.
    vs: Vec<Vec<C64>>,
    taus: Vec<C64>,
    /// Reduced matrix, column-major.
    a: Vec<C64>,
}

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

impl Householder {
    fn factor(input: &Tensor) -> Result<Self> {
        if input.rank() != 2 {
            return Err(Error::Shape(format!(
                "QR needs a matrix, got dims {:?}",
                input.dims()
            )));
        }
        let (m, n) = (input.rows(), input.cols());
        let src = input.data();
        let mut a = vec![ZERO; m * n];
        for i in 0..m {
            for j in 0..n {
                a[j * m + i] = src[i * n + j];
            }
        }
        let steps = m.min(n);
        let mut vs = Vec::with_capacity(steps);
        let mut taus = Vec::with_capacity(steps);

        for j in 0..steps {
            let col = &a[j * m + j..(j + 1) * m];
            let alpha = col[0];
            let xmax = col[1..].iter().fold(0.0f64, |m, z| m.max(z.re.abs()).max(z.im.abs()));
            let mut v = vec![ZERO; m - j];
            v[0] = ONE;
            if xmax == 0.0 && alpha.im == 0.0 {
                vs.push(v);
                taus.push(ZERO);
                continue;
            }
            // scaled to survive denormal entries
            let s = xmax.max(alpha.re.abs()).max(alpha.im.abs());
            let norm = s * col.iter().map(|z| (z / s).norm_sqr()).sum::<f64>().sqrt();
            let beta = if alpha.re >= 0.0 { -norm } else { norm };
            let tau = (C64::new(beta, 0.0) - alpha) / beta;
            // 1 / (alpha - beta) without squaring a possibly tiny denominator
            let denom = alpha - beta;
            let mag = denom.norm();
            let scale = (denom / mag).conj() / mag;
            for (vi, xi) in v[1..].iter_mut().zip(&col[1..]) {
                *vi = xi * scale;
            }
            a[j * m + j] = C64::new(beta, 0.0);
            for i in j + 1..m {
                a[j * m + i] = ZERO;
            }
            // columns to the right get H^H = I - conj(tau) v v^H
            let ctau = tau.conj();
            for c in j + 1..n {
                let colc = &mut a[c * m + j..(c + 1) * m];
                let w = dotc(&v, colc);
                let s = ctau * w;
                for (ai, vi) in colc.iter_mut().zip(&v) {
                    *ai -= s * vi;
                }
            }
            vs.push(v);
            taus.push(tau);
        }
        Ok(Self { m, n, vs, taus, a })
    }

    /// Columns `cols` of the full `Q = H_0 H_1 ⋯`, as an `m × cols.len()` row-major matrix.
    ///
    /// Uses the compact form `Q = I − V T Vᴴ` with upper triangular `T`, so the
    /// bulk of the work is matrix products.
    fn q_columns(&self, cols: std::ops::Range<usize>) -> Tensor {
        let (m, k, width) = (self.m, self.vs.len(), cols.len());
        let mut out = Tensor::zeros(&[m, width]);
        if width == 0 {
            return out;
        }
        if k == 0 {
            for (q, c) in cols.enumerate() {
                out.data_mut()[c * width + q] = ONE;
            }
            return out;
        }
        // V is m × k, unit lower trapezoidal
        let mut v = vec![ZERO; m * k];
        let mut vh = vec![ZERO; k * m];
        for (j, vj) in self.vs.iter().enumerate() {
            for (i, &x) in vj.iter().enumerate() {
                v[(j + i) * k + j] = x;
                vh[j * m + j + i] = x.conj();
            }
        }
        let mut gram = vec![ZERO; k * k];
        gemm(k, m, k, &vh, &v, &mut gram);
        let mut t = vec![ZERO; k * k];
        for j in 0..k {
            let tau = self.taus[j];
            t[j * k + j] = tau;
            if tau == ZERO {
                continue;
            }
            for r in 0..j {
                let mut s = ZERO;
                for c in r..j {
                    s += t[r * k + c] * gram[c * k + j];
                }
                t[r * k + j] = -tau * s;
            }
        }
        // Vᴴ restricted to the requested columns of the identity
        let mut x = vec![ZERO; k * width];
        for (q, c) in cols.clone().enumerate() {
            for p in 0..k {
                x[p * width + q] = vh[p * m + c];
            }
        }
        let mut y = vec![ZERO; k * width];
        gemm(k, k, width, &t, &x, &mut y);
        gemm(m, k, width, &v, &y, out.data_mut());
        let data = out.data_mut();
        for z in data.iter_mut() {
            *z = -*z;
        }
        for (q, c) in cols.enumerate() {
            data[c * width + q] += ONE;
        }
        out
    }

    /// Thin factors with the diagonal of `R` made non-negative.
    fn thin(&self) -> QrPair {
        let k = self.m.min(self.n);
        let mut q = self.q_columns(0..k);
        let mut r = Tensor::zeros(&[k, self.n]);
        {
            let rd = r.data_mut();
            for i in 0..k {
                for j in i..self.n {
                    rd[i * self.n + j] = self.a[j * self.m + i];
                }
            }
        }
        for i in 0..k {
            let d = r.data()[i * self.n + i];
            if d.re < 0.0 {
                for j in i..self.n {
                    let z = &mut r.data_mut()[i * self.n + j];
                    *z = -*z;
                }
                for row in 0..self.m {
                    let z = &mut q.data_mut()[row * k + i];
                    *z = -*z;
                }
            }
        }
        QrPair { q, r }
    }
}

/// Thin QR of an `m × n` matrix with `m ≥ n`.
pub fn qr_thin(input: &Tensor) -> Result<QrPair> {
    let h = Householder::factor(input)?;
    if h.m < h.n {
        return Err(Error::Shape(format!(
            "thin QR needs rows >= cols, got {}x{}",
            h.m, h.n
        )));
    }
    Ok(h.thin())
}

/// QR with `k = min(m, n)` columns in `q`; accepts wide matrices.
pub fn qr_economic(input: &Tensor) -> Result<QrPair> {
    Ok(Householder::factor(input)?.thin())
}

/// Full QR of an `m × n` matrix with `m ≥ n`, returning the complement `q2` as well.
pub fn qr_full(input: &Tensor) -> Result<FullQr> {
    let h = Householder::factor(input)?;
    if h.m < h.n {
        return Err(Error::Shape(format!(
            "full QR needs rows >= cols, got {}x{}",
            h.m, h.n
        )));
    }
    let q2 = (h.m > h.n).then(|| h.q_columns(h.n..h.m));
    Ok(FullQr {
        thin: h.thin(),
        q2,
    })
}

/// The first `count` columns of the `q2` block of `input`'s full QR.
///
/// `count` may be at most `m − n`.
pub fn complement_columns(input: &Tensor, count: usize) -> Result<Option<Tensor>> {
    let h = Householder::factor(input)?;
    if h.m < h.n || count > h.m - h.n {
        return Err(Error::Shape(format!(
            "cannot take {count} complement columns of a {}x{} matrix",
            h.m, h.n
        )));
    }
    Ok((count > 0).then(|| h.q_columns(h.n..h.n + count)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, n: usize, seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::from_vec(
            &[m, n],
            (0..m * n)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    fn orthonormality_error(q: &Tensor) -> f64 {
        let g = q.adjoint().matmul(q).unwrap();
        let mut e = 0.0f64;
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                let target = if i == j { 1.0 } else { 0.0 };
                e = e.max((g.get(&[i, j]) - target).norm());
            }
        }
        e
    }

    fn diff(a: &Tensor, b: &Tensor) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn identity_factors_trivially() {
        let qr = qr_thin(&Tensor::eye(2)).unwrap();
        assert_eq!(qr.q, Tensor::eye(2));
        assert_eq!(qr.r, Tensor::eye(2));
    }

    #[test]
    fn single_column_normalizes() {
        let a = Tensor::from_real(&[2, 1], &[3.0, 4.0]).unwrap();
        let qr = qr_thin(&a).unwrap();
        assert!((qr.q.get(&[0, 0]) - C64::new(0.6, 0.0)).norm() < 1e-15);
        assert!((qr.q.get(&[1, 0]) - C64::new(0.8, 0.0)).norm() < 1e-15);
        assert!((qr.r.get(&[0, 0]) - C64::new(5.0, 0.0)).norm() < 1e-14);

        let full = qr_full(&a).unwrap();
        let q2 = full.q2.unwrap();
        assert_eq!(q2.dims(), &[2, 1]);
        let overlap = q2.adjoint().matmul(&a).unwrap();
        assert!(overlap.get(&[0, 0]).norm() <= 1e-12);
    }

    #[test]
    fn random_tall_matrix() {
        let a = random(6, 3, 1);
        let qr = qr_thin(&a).unwrap();
        assert!(orthonormality_error(&qr.q) < 1e-12);
        let rec = qr.q.matmul(&qr.r).unwrap();
        assert!(diff(&rec, &a) / a.norm() <= 1e-12);
        for i in 0..3 {
            let d = qr.r.get(&[i, i]);
            assert!(d.re >= 0.0 && d.im == 0.0);
            for j in 0..i {
                assert_eq!(qr.r.get(&[i, j]), ZERO);
            }
        }
    }

    #[test]
    fn full_qr_random_8x2() {
        let a = random(8, 2, 2);
        let full = qr_full(&a).unwrap();
        let q2 = full.q2.as_ref().unwrap();
        assert_eq!(q2.dims(), &[8, 6]);
        let mut cols = Vec::new();
        for t in [&full.thin.q, q2] {
            for c in 0..t.cols() {
                cols.push((0..8).map(|r| t.get(&[r, c])).collect::<Vec<_>>());
            }
        }
        for i in 0..cols.len() {
            for j in 0..cols.len() {
                let ip: C64 = cols[i].iter().zip(&cols[j]).map(|(x, y)| x.conj() * y).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((ip - target).norm() < 1e-12, "pair ({i},{j})");
            }
        }
        let proj = q2.adjoint().matmul(&a).unwrap();
        assert!(proj.data().iter().all(|z| z.norm() <= 1e-12));
    }

    #[test]
    fn square_full_rank_has_no_complement() {
        let full = qr_full(&random(4, 4, 3)).unwrap();
        assert!(full.q2.is_none());
        assert_eq!(full.complement_dim(), 0);
    }

    #[test]
    fn rank_deficient_input_still_orthonormal() {
        let mut a = Tensor::zeros(&[5, 3]);
        a.set(&[0, 0], ONE);
        a.set(&[1, 2], C64::new(0.0, 2.0));
        let qr = qr_thin(&a).unwrap();
        assert!(orthonormality_error(&qr.q) < 1e-14);
        assert!(diff(&qr.q.matmul(&qr.r).unwrap(), &a) < 1e-14);

        let zero = Tensor::zeros(&[3, 2]);
        let qr = qr_thin(&zero).unwrap();
        assert!(orthonormality_error(&qr.q) < 1e-14);
    }

    #[test]
    fn complement_is_nested() {
        let a = random(7, 2, 4);
        let full = qr_full(&a).unwrap();
        let q2 = full.q2.unwrap();
        for count in 1..=5 {
            let part = complement_columns(&a, count).unwrap().unwrap();
            assert!(diff(&part, &q2.truncated(&[7, count])) < 1e-14);
        }
        assert!(complement_columns(&a, 0).unwrap().is_none());
        assert!(complement_columns(&a, 6).is_err());
    }

    #[test]
    fn zero_padding_keeps_leading_columns() {
        let a = random(6, 2, 5);
        let padded = a.padded(&[6, 4]);
        let qa = qr_full(&a).unwrap();
        let qp = qr_economic(&padded).unwrap();
        let q2 = qa.q2.unwrap();
        for row in 0..6 {
            for c in 0..2 {
                assert!((qp.q.get(&[row, c]) - qa.thin.q.get(&[row, c])).norm() < 1e-14);
                assert!((qp.q.get(&[row, c + 2]) - q2.get(&[row, c])).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn wide_matrix_economic() {
        let a = random(2, 5, 6);
        let qr = qr_economic(&a).unwrap();
        assert_eq!(qr.q.dims(), &[2, 2]);
        assert_eq!(qr.r.dims(), &[2, 5]);
        assert!(diff(&qr.q.matmul(&qr.r).unwrap(), &a) < 1e-13);
        assert!(qr_thin(&a).is_err());
    }

    #[test]
    fn graded_tiny_columns_stay_finite() {
        // columns whose squared entries underflow
        let mut a = random(12, 4, 7);
        for (j, scale) in [1.0, 1e-120, 1e-165, 1e-200].into_iter().enumerate() {
            for i in 0..12 {
                let z = a.get(&[i, j]) * scale;
                a.set(&[i, j], z);
            }
        }
        let qr = qr_thin(&a).unwrap();
        assert!(qr.q.data().iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        assert!(orthonormality_error(&qr.q) < 1e-13);
        assert!(diff(&qr.q.matmul(&qr.r).unwrap(), &a) < 1e-13);
    }
}
