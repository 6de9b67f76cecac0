//! Matrix product operators.
//!
//! Operator tensors use the index order `[left bond, physical out, physical in, right bond]`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct Mpo {
    sites: Vec<Tensor>,
}

impl Mpo {
    pub fn from_sites(sites: Vec<Tensor>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Validation("an MPO needs at least one site".into()));
        }
        for (i, w) in sites.iter().enumerate() {
            if w.rank() != 4 || w.dims()[1] != w.dims()[2] {
                return Err(Error::Shape(format!(
                    "MPO site {i} has dims {:?}, expected [wl, d, d, wr]",
                    w.dims()
                )));
            }
        }
        if sites[0].dims()[0] != 1 || sites[sites.len() - 1].dims()[3] != 1 {
            return Err(Error::Shape("MPO boundary bonds must be 1".into()));
        }
        for i in 1..sites.len() {
            if sites[i - 1].dims()[3] != sites[i].dims()[0] {
                return Err(Error::Shape(format!("MPO bond {i} mismatch")));
            }
        }
        Ok(Self { sites })
    }

    /// Identity operator on the given physical dimensions.
    pub fn identity(phys_dims: &[usize]) -> Result<Self> {
        let sites = phys_dims
            .iter()
            .map(|&d| Tensor::eye(d).reshape(&[1, d, d, 1]))
            .collect::<Result<Vec<_>>>()?;
        Self::from_sites(sites)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Tensor] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> &Tensor {
        &self.sites[i]
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|w| w.dims()[1]).collect()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.sites.iter().map(|w| w.dims()[0]).collect();
        d.push(1);
        d
    }
}

/// A Hamiltonian made of on-site terms and nearest-neighbour products
/// `Σ_j h_j + Σ_j Σ_k L_{j,k} ⊗ R_{j+1,k}`.
/// `T[b, w, s, k] W[w, σ, s, w']` summed over `w` and `s`, laid out as `[b, σ, w', k]`.
///
/// Operator tensors are mostly zero, so only their nonzero entries are visited.
pub(crate) fn apply_operator(t: &Tensor, w: &Tensor) -> Result<Tensor> {
    let mismatch = || {
        Error::Shape(format!(
            "operator {:?} does not act on partial contraction {:?}",
            w.dims(),
            t.dims()
        ))
    };
    if t.rank() != 4 || w.rank() != 4 {
        return Err(mismatch());
    }
    let (b, wl, s, k) = (t.dims()[0], t.dims()[1], t.dims()[2], t.dims()[3]);
    let (wl2, d, s2, wr) = (w.dims()[0], w.dims()[1], w.dims()[2], w.dims()[3]);
    if wl != wl2 || s != s2 {
        return Err(mismatch());
    }
    let mut out = Tensor::zeros(&[b, d, wr, k]);
    let src = t.data();
    let dst = out.data_mut();
    for (idx, &v) in w.data().iter().enumerate() {
        if v == C64::new(0.0, 0.0) {
            continue;
        }
        let y = idx % wr;
        let i = (idx / wr) % s;
        let o = (idx / (wr * s)) % d;
        let x = idx / (wr * s * d);
        for bi in 0..b {
            let from = ((bi * wl + x) * s + i) * k;
            let to = ((bi * d + o) * wr + y) * k;
            for (z, &a) in dst[to..to + k].iter_mut().zip(&src[from..from + k]) {
                *z += v * a;
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct NearestNeighbor {
    phys_dims: Vec<usize>,
    onsite: Vec<Option<Tensor>>,
    /// `bonds[j]` couples sites `j` and `j + 1`.
    bonds: Vec<Vec<(Tensor, Tensor)>>,
}

impl NearestNeighbor {
    pub fn new(phys_dims: &[usize]) -> Self {
        let n = phys_dims.len();
        Self {
            phys_dims: phys_dims.to_vec(),
            onsite: vec![None; n],
            bonds: vec![Vec::new(); n.saturating_sub(1)],
        }
    }

    fn check_op(&self, site: usize, op: &Tensor) -> Result<()> {
        let d = *self
            .phys_dims
            .get(site)
            .ok_or_else(|| Error::Validation(format!("site {site} outside the chain")))?;
        if op.dims() != [d, d] {
            return Err(Error::Shape(format!(
                "operator dims {:?} on site {site} of dimension {d}",
                op.dims()
            )));
        }
        Ok(())
    }

    /// Adds `op` to the on-site term of `site`.
    pub fn add_onsite(&mut self, site: usize, op: Tensor) -> Result<()> {
        self.check_op(site, &op)?;
        match &mut self.onsite[site] {
            Some(h) => h.axpy(C64::new(1.0, 0.0), &op),
            slot => *slot = Some(op),
        }
        Ok(())
    }

    /// Adds `left ⊗ right` acting on `site` and `site + 1`.
    pub fn add_bond(&mut self, site: usize, left: Tensor, right: Tensor) -> Result<()> {
        if site + 1 >= self.phys_dims.len() {
            return Err(Error::Validation(format!("no bond to the right of site {site}")));
        }
        self.check_op(site, &left)?;
        self.check_op(site + 1, &right)?;
        self.bonds[site].push((left, right));
        Ok(())
    }

    /// Finite-state-machine MPO. Channel 0 carries the identity from the left,
    /// the last channel carries completed terms, and the channels in between
    /// carry the left halves of the bond terms crossing that bond.
    pub fn to_mpo(&self) -> Result<Mpo> {
        let n = self.phys_dims.len();
        // bond b sits between sites b-1 and b
        let width = |b: usize| -> usize {
            if b == 0 || b == n {
                1
            } else {
                2 + self.bonds[b - 1].len()
            }
        };
        let mut sites = Vec::with_capacity(n);
        for j in 0..n {
            let d = self.phys_dims[j];
            let (wl, wr) = (width(j), width(j + 1));
            let mut w = Tensor::zeros(&[wl, d, d, wr]);
            // channel indices on either side
            let idle_l = 0usize;
            let done_l = wl - 1;
            let idle_r = 0usize;
            let done_r = wr - 1;
            let put = |w: &mut Tensor, a: usize, b: usize, op: &Tensor| {
                for s in 0..d {
                    for t in 0..d {
                        let v = w.get(&[a, s, t, b]) + op.get(&[s, t]);
                        w.set(&[a, s, t, b], v);
                    }
                }
            };
            let eye = Tensor::eye(d);
            if j > 0 && j + 1 < n {
                put(&mut w, idle_l, idle_r, &eye);
                put(&mut w, done_l, done_r, &eye);
            } else if j == 0 && n > 1 {
                put(&mut w, idle_l, idle_r, &eye);
            } else if j + 1 == n && n > 1 {
                put(&mut w, done_l, done_r, &eye);
            }
            // for a single site both boundary channels coincide
            if let Some(h) = &self.onsite[j] {
                put(&mut w, idle_l, done_r, h);
            }
            if j + 1 < n {
                for (k, (left, _)) in self.bonds[j].iter().enumerate() {
                    put(&mut w, idle_l, 1 + k, left);
                }
            }
            if j > 0 {
                for (k, (_, right)) in self.bonds[j - 1].iter().enumerate() {
                    put(&mut w, 1 + k, done_r, right);
                }
            }
            sites.push(w);
        }
        Mpo::from_sites(sites)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_mpo_shape() {
        let mpo = Mpo::identity(&[2, 3]).unwrap();
        assert_eq!(mpo.phys_dims(), vec![2, 3]);
        assert_eq!(mpo.bond_dims(), vec![1, 1, 1]);
    }

    #[test]
    fn bond_dimension_counts_terms() {
        let x = Tensor::from_real(&[2, 2], &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let mut h = NearestNeighbor::new(&[2, 2, 2]);
        h.add_bond(0, x.clone(), x.clone()).unwrap();
        h.add_bond(0, x.clone(), x.clone()).unwrap();
        h.add_bond(1, x.clone(), x.clone()).unwrap();
        let mpo = h.to_mpo().unwrap();
        assert_eq!(mpo.bond_dims(), vec![1, 4, 3, 1]);
    }

    #[test]
    fn rejects_bad_operators() {
        let mut h = NearestNeighbor::new(&[2, 3]);
        assert!(h.add_onsite(0, Tensor::eye(3)).is_err());
        assert!(h.add_bond(1, Tensor::eye(3), Tensor::eye(3)).is_err());
    }
}
