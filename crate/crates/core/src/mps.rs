//! Matrix product states with open boundaries.
//!
//! Site tensors use the index order `[left bond, physical, right bond]`.
//! Sites are numbered from 0; bond `b` joins sites `b − 1` and `b`, so bonds
//! `0` and `N` are the trivial boundary bonds of dimension 1.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::mpo::{apply_operator, Mpo};
use crate::qr::{qr_economic, QrPair};
use crate::tensor::{contract, Tensor};

/// Position of the orthogonality center.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Center {
    /// `A_C` sits on this site; sites to the left are left-orthogonal, to the right right-orthogonal.
    Site(usize),
    /// An explicit bond matrix `C` sits on internal bond `b` (between sites `b − 1` and `b`).
    Bond(usize),
}

#[derive(Clone, Debug)]
pub struct Mps {
    sites: Vec<Tensor>,
    center: Option<Center>,
    bond_matrix: Option<Tensor>,
}

fn validate_chain(sites: &[Tensor]) -> Result<()> {
    if sites.is_empty() {
        return Err(Error::Validation("an MPS needs at least one site".into()));
    }
    for (i, s) in sites.iter().enumerate() {
        if s.rank() != 3 {
            return Err(Error::Shape(format!("site {i} has rank {}, expected 3", s.rank())));
        }
    }
    if sites[0].dims()[0] != 1 || sites[sites.len() - 1].dims()[2] != 1 {
        return Err(Error::Shape("boundary bond dimensions must be 1".into()));
    }
    for i in 1..sites.len() {
        let (l, r) = (sites[i - 1].dims()[2], sites[i].dims()[0]);
        if l != r {
            return Err(Error::Shape(format!(
                "bond {i}: site {} has right dimension {l} but site {i} has left dimension {r}",
                i - 1
            )));
        }
    }
    Ok(())
}

impl Mps {
    /// Wraps raw site tensors. No gauge is assumed.
    pub fn from_sites(sites: Vec<Tensor>) -> Result<Self> {
        validate_chain(&sites)?;
        Ok(Self {
            sites,
            center: None,
            bond_matrix: None,
        })
    }

    /// Wraps site tensors that the caller guarantees are in the stated site-centered gauge.
    pub(crate) fn from_sites_centered(sites: Vec<Tensor>, center: usize) -> Self {
        debug_assert!(validate_chain(&sites).is_ok());
        Self {
            sites,
            center: Some(Center::Site(center)),
            bond_matrix: None,
        }
    }

    /// Product state with every bond dimension equal to 1 and the center on site 0.
    pub fn product_state(local_states: &[Vec<C64>]) -> Result<Self> {
        if local_states.is_empty() {
            return Err(Error::Validation("an MPS needs at least one site".into()));
        }
        let mut sites = Vec::with_capacity(local_states.len());
        for (i, v) in local_states.iter().enumerate() {
            if v.is_empty() {
                return Err(Error::Validation(format!("local state {i} is empty")));
            }
            let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if (n - 1.0).abs() > 1e-12 {
                return Err(Error::Validation(format!(
                    "local state {i} has norm {n}, expected 1"
                )));
            }
            sites.push(Tensor::from_vec(&[1, v.len(), 1], v.clone())?);
        }
        Ok(Self::from_sites_centered(sites, 0))
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn site(&self, i: usize) -> &Tensor {
        &self.sites[i]
    }

    pub fn sites(&self) -> &[Tensor] {
        &self.sites
    }

    pub(crate) fn sites_mut(&mut self) -> &mut [Tensor] {
        &mut self.sites
    }

    /// Replaces site `i` without checking gauge. Bond dimensions must still match.
    pub fn set_site(&mut self, i: usize, t: Tensor) -> Result<()> {
        self.absorb_bond_matrix();
        let old = std::mem::replace(&mut self.sites[i], t);
        if let Err(e) = validate_chain(&self.sites) {
            self.sites[i] = old;
            return Err(e);
        }
        self.center = None;
        self.bond_matrix = None;
        Ok(())
    }

    pub fn center(&self) -> Option<Center> {
        self.center
    }

    pub(crate) fn set_center(&mut self, c: Option<Center>) {
        self.center = c;
    }

    /// `C` when the state is bond-centered.
    pub fn bond_matrix(&self) -> Option<&Tensor> {
        self.bond_matrix.as_ref()
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.dims()[1]).collect()
    }

    /// `D_0, …, D_N`.
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.sites.iter().map(|s| s.dims()[0]).collect();
        d.push(1);
        d
    }

    /// `D_1, …, D_{N−1}`.
    pub fn internal_bond_dims(&self) -> Vec<usize> {
        self.sites[1..].iter().map(|s| s.dims()[0]).collect()
    }

    /// Largest dimension bond `b` can take with its neighbours held fixed:
    /// `min(d_{b−1} D_{b−1}, d_b D_{b+1})`.
    pub fn structural_cap(&self, b: usize) -> usize {
        assert!(b >= 1 && b < self.len(), "bond {b} is not internal");
        let left = &self.sites[b - 1];
        let right = &self.sites[b];
        (left.dims()[0] * left.dims()[1]).min(right.dims()[1] * right.dims()[2])
    }

    /// Multiplies site `i` by `s`.
    pub fn scale_site(&mut self, i: usize, s: C64) {
        self.sites[i].scale(s);
        if self.center != Some(Center::Site(i)) {
            self.absorb_bond_matrix();
            self.center = None;
        }
    }

    fn absorb_bond_matrix(&mut self) {
        if let (Some(Center::Bond(b)), Some(c)) = (self.center, self.bond_matrix.take()) {
            let site = &self.sites[b];
            let t = contract(&c, site, &[(1, 0)]).expect("bond matrix matches site");
            self.sites[b] = t;
            self.center = Some(Center::Site(b));
        }
    }

    /// Left-orthogonalizes site `i` and multiplies the remainder into site `i + 1`.
    fn shift_right(&mut self, i: usize) {
        let (c, a_l) = split_left_orthogonal(&self.sites[i]).expect("site is rank 3");
        self.sites[i] = a_l;
        self.sites[i + 1] = contract(&c, &self.sites[i + 1], &[(1, 0)]).expect("bond matches");
    }

    /// Right-orthogonalizes site `i` and multiplies the remainder into site `i − 1`.
    fn shift_left(&mut self, i: usize) {
        let (a_r, c) = split_right_orthogonal(&self.sites[i]).expect("site is rank 3");
        self.sites[i] = a_r;
        self.sites[i - 1] = contract(&self.sites[i - 1], &c, &[(2, 0)]).expect("bond matches");
    }

    /// Moves the orthogonality center to site `target` with successive thin QRs.
    pub fn canonicalize(&mut self, target: usize) -> Result<()> {
        if target >= self.len() {
            return Err(Error::Validation(format!(
                "center {target} outside chain of {} sites",
                self.len()
            )));
        }
        self.absorb_bond_matrix();
        match self.center {
            Some(Center::Site(c)) => {
                for i in c..target {
                    self.shift_right(i);
                }
                for i in (target + 1..=c).rev() {
                    self.shift_left(i);
                }
            }
            _ => {
                for i in 0..target {
                    self.shift_right(i);
                }
                for i in (target + 1..self.len()).rev() {
                    self.shift_left(i);
                }
            }
        }
        self.center = Some(Center::Site(target));
        Ok(())
    }

    /// Gauges the state so that an explicit bond matrix sits on internal bond `b`.
    pub fn canonicalize_bond(&mut self, b: usize) -> Result<()> {
        if b == 0 || b >= self.len() {
            return Err(Error::Validation(format!("bond {b} is not internal")));
        }
        self.canonicalize(b - 1)?;
        let (c, a_l) = split_left_orthogonal(&self.sites[b - 1])?;
        self.sites[b - 1] = a_l;
        self.center = Some(Center::Bond(b));
        self.bond_matrix = Some(c);
        Ok(())
    }

    /// Contracts the whole chain into a dense vector; site 0 is the most significant index.
    pub fn to_dense(&self) -> Vec<C64> {
        let me = self.absorbed();
        let mut acc = me.sites[0].clone();
        for s in &me.sites[1..] {
            let r = acc.rank();
            acc = contract(&acc, s, &[(r - 1, 0)]).expect("bonds match");
        }
        acc.into_data()
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &Mps) -> Result<C64> {
        if self.phys_dims() != other.phys_dims() {
            return Err(Error::Shape("overlap of states on different spaces".into()));
        }
        let (a, b) = (self.absorbed(), other.absorbed());
        let mut env = Tensor::scalar(C64::new(1.0, 0.0)).reshape(&[1, 1])?;
        for (bra, ket) in a.sites.iter().zip(&b.sites) {
            env = transfer(&env, bra, ket)?;
        }
        Ok(env.data()[0])
    }

    fn absorbed(&self) -> std::borrow::Cow<'_, Mps> {
        if self.bond_matrix.is_some() {
            let mut tmp = self.clone();
            tmp.absorb_bond_matrix();
            std::borrow::Cow::Owned(tmp)
        } else {
            std::borrow::Cow::Borrowed(self)
        }
    }

    /// `‖ψ‖` from a full transfer-matrix contraction, independent of gauge bookkeeping.
    pub fn norm(&self) -> f64 {
        self.overlap(self).expect("same space").re.max(0.0).sqrt()
    }

    /// Frobenius norm of the center tensor (or bond matrix); equals [`Mps::norm`] in canonical form.
    pub fn center_norm(&self) -> Option<f64> {
        match (self.center, &self.bond_matrix) {
            (Some(Center::Site(c)), None) => Some(self.sites[c].norm()),
            (Some(Center::Bond(_)), Some(c)) => Some(c.norm()),
            _ => None,
        }
    }

    /// `⟨ψ| ⊗_k op_k |ψ⟩ / ⟨ψ|ψ⟩` for operators on distinct sites.
    pub fn expect_product(&self, ops: &[(usize, &Tensor)]) -> Result<C64> {
        let me = self.absorbed();
        for (k, &(site, op)) in ops.iter().enumerate() {
            if site >= me.len() {
                return Err(Error::Validation(format!("site {site} outside the chain")));
            }
            let d = me.sites[site].dims()[1];
            if op.dims() != [d, d] {
                return Err(Error::Shape(format!(
                    "operator of dims {:?} at site {site} with physical dimension {d}",
                    op.dims()
                )));
            }
            if ops[..k].iter().any(|&(s, _)| s == site) {
                return Err(Error::Validation(format!("site {site} given twice")));
            }
        }
        let mut num = Tensor::scalar(C64::new(1.0, 0.0)).reshape(&[1, 1])?;
        let mut den = num.clone();
        for (i, a) in me.sites.iter().enumerate() {
            den = transfer(&den, a, a)?;
            match ops.iter().find(|&&(s, _)| s == i) {
                Some(&(_, op)) => {
                    let oa = apply_local(op, a)?;
                    num = transfer(&num, a, &oa)?;
                }
                None => num = transfer(&num, a, a)?,
            }
        }
        Ok(num.data()[0] / den.data()[0].re)
    }

    /// `⟨ψ|op_site|ψ⟩ / ⟨ψ|ψ⟩`.
    pub fn expect_local(&self, op: &Tensor, site: usize) -> Result<C64> {
        self.expect_product(&[(site, op)])
    }

    /// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩` for an MPO `H`.
    pub fn expect_mpo(&self, mpo: &Mpo) -> Result<C64> {
        if mpo.len() != self.len() || mpo.phys_dims() != self.phys_dims() {
            return Err(Error::Shape("MPO does not match the state".into()));
        }
        let me = self.absorbed();
        let mut env = Tensor::scalar(C64::new(1.0, 0.0)).reshape(&[1, 1, 1])?;
        let mut den = Tensor::scalar(C64::new(1.0, 0.0)).reshape(&[1, 1])?;
        for (a, w) in me.sites.iter().zip(mpo.sites()) {
            env = extend_left(&env, a, w, a)?;
            den = transfer(&den, a, a)?;
        }
        Ok(env.data()[0] / den.data()[0].re)
    }
}

/// `op · A` on the physical index: `[l, σ, r]`.
pub(crate) fn apply_local(op: &Tensor, a: &Tensor) -> Result<Tensor> {
    Ok(contract(op, a, &[(1, 1)])?.permute(&[1, 0, 2]))
}

/// One step of the overlap transfer matrix: `E'[b', k'] = Σ conj(bra[b,σ,b']) E[b,k] ket[k,σ,k']`.
pub(crate) fn transfer(env: &Tensor, bra: &Tensor, ket: &Tensor) -> Result<Tensor> {
    let t = contract(env, ket, &[(1, 0)])?; // [b, σ, k']
    contract(&bra.conj(), &t, &[(0, 0), (1, 1)]) // [b', k']
}

/// Left environment step `E'[b', w', k'] = Σ conj(bra[b,σ,b']) E[b,w,k] W[w,σ,s,w'] ket[k,s,k']`.
pub(crate) fn extend_left(env: &Tensor, bra: &Tensor, w: &Tensor, ket: &Tensor) -> Result<Tensor> {
    let t1 = contract(env, ket, &[(2, 0)])?; // [b, w, s, k']
    let t2 = apply_operator(&t1, w)?; // [b, σ, w', k']
    contract(&bra.conj(), &t2, &[(0, 0), (1, 1)]) // [b', w', k']
}

/// Right environment step `E[b, w, k] = Σ conj(bra[b,σ,b']) W[w,σ,s,w'] ket[k,s,k'] E'[b',w',k']`.
pub(crate) fn extend_right(env: &Tensor, bra: &Tensor, w: &Tensor, ket: &Tensor) -> Result<Tensor> {
    let t1 = contract(ket, env, &[(2, 2)])?; // [k, s, b', w']
    let t2 = contract(w, &t1, &[(2, 1), (3, 3)])?; // [w, σ, k, b']
    contract(&bra.conj(), &t2, &[(1, 1), (2, 3)]) // [b, w, k]
}

/// Splits `A = A_L · C` with a QR of the left unfolding; returns `(C, A_L)`.
pub(crate) fn split_left_orthogonal(a: &Tensor) -> Result<(Tensor, Tensor)> {
    let (dl, d, dr) = (a.dims()[0], a.dims()[1], a.dims()[2]);
    let QrPair { q, r } = qr_economic(&a.clone().reshape(&[dl * d, dr])?)?;
    let k = q.cols();
    Ok((r, q.reshape(&[dl, d, k])?))
}

/// Splits `A = C · A_R` with a QR of the adjoint right unfolding; returns `(A_R, C)`.
pub(crate) fn split_right_orthogonal(a: &Tensor) -> Result<(Tensor, Tensor)> {
    let (dl, d, dr) = (a.dims()[0], a.dims()[1], a.dims()[2]);
    let m = a.clone().reshape(&[dl, d * dr])?.adjoint();
    let QrPair { q, r } = qr_economic(&m)?;
    let k = q.cols();
    Ok((q.adjoint().reshape(&[k, d, dr])?, r.adjoint()))
}

/// Largest deviation of `Σ A† A` from the identity over the left unfolding.
pub fn left_orthogonality_error(a: &Tensor) -> f64 {
    let (dl, d, dr) = (a.dims()[0], a.dims()[1], a.dims()[2]);
    let m = a.clone().reshape(&[dl * d, dr]).expect("rank 3");
    identity_error(&m.adjoint().matmul(&m).expect("square"))
}

/// Largest deviation of `Σ A A†` from the identity over the right unfolding.
pub fn right_orthogonality_error(a: &Tensor) -> f64 {
    let (dl, d, dr) = (a.dims()[0], a.dims()[1], a.dims()[2]);
    let m = a.clone().reshape(&[dl, d * dr]).expect("rank 3");
    identity_error(&m.matmul(&m.adjoint()).expect("square"))
}

fn identity_error(g: &Tensor) -> f64 {
    let n = g.rows();
    let mut e = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let t = if i == j { 1.0 } else { 0.0 };
            e = e.max((g.get(&[i, j]) - t).norm());
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn up() -> Vec<C64> {
        vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
    }

    fn pauli_z() -> Tensor {
        Tensor::from_real(&[2, 2], &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }

    #[test]
    fn single_spin_product_state() {
        let mps = Mps::product_state(&[up()]).unwrap();
        assert_eq!(mps.len(), 1);
        assert!((mps.norm() - 1.0).abs() < 1e-15);
        let sz = mps.expect_local(&pauli_z(), 0).unwrap();
        assert!((sz - 1.0).norm() < 1e-15);
    }

    #[test]
    fn product_state_rejects_unnormalized() {
        let bad = vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        assert!(matches!(
            Mps::product_state(&[up(), bad]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn product_state_bonds_are_one() {
        let mps = Mps::product_state(&[up(), vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]]).unwrap();
        assert_eq!(mps.bond_dims(), vec![1, 1, 1]);
        assert_eq!(mps.center(), Some(Center::Site(0)));
        assert!((mps.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scaling_a_site_scales_the_norm() {
        let mut mps = Mps::product_state(&[up(), up(), up()]).unwrap();
        mps.scale_site(1, C64::new(2.0, 0.0));
        assert!((mps.norm() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn local_operator_dimension_checked() {
        let mps = Mps::product_state(&[up()]).unwrap();
        assert!(mps.expect_local(&Tensor::eye(3), 0).is_err());
        assert!(mps.expect_local(&Tensor::eye(2), 1).is_err());
    }

    #[test]
    fn structural_cap_of_product_state() {
        let mps = Mps::product_state(&[up(), vec![C64::new(1.0, 0.0); 1], up()]).unwrap();
        assert_eq!(mps.structural_cap(1), 1);
        let mps = Mps::product_state(&[up(), up()]).unwrap();
        assert_eq!(mps.structural_cap(1), 2);
    }
}
