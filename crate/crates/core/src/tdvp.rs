//! One-site TDVP at fixed bond dimensions.
//!
//! A step is the symmetric composition of a left-to-right and a
//! right-to-left half sweep, each of length `dt/2`. Within a half sweep the
//! center tensor is evolved forward with the one-site effective Hamiltonian
//! `H(i)`, split by QR, and the bond matrix is evolved backward with the
//! zero-site effective Hamiltonian `K(i)` before moving on.

use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::krylov::{self, KrylovOptions};
use crate::mpo::{apply_operator, Mpo};
use crate::mps::{extend_left, extend_right, split_left_orthogonal, split_right_orthogonal, Center, Mps};
use crate::tensor::{contract, Tensor};

fn boundary() -> Tensor {
    Tensor::scalar(C64::new(1.0, 0.0))
        .reshape(&[1, 1, 1])
        .expect("one element")
}

/// `H(i) A`: contraction of `F_L`, `W_i`, `F_R` with a site tensor `[l, σ, r]`.
pub fn apply_site_hamiltonian(fl: &Tensor, w: &Tensor, fr: &Tensor, a: &Tensor) -> Result<Tensor> {
    let t1 = contract(fl, a, &[(2, 0)])?; // [b, w, s, k']
    let t2 = apply_operator(&t1, w)?; // [b, σ, w', k']
    contract(&t2, fr, &[(2, 1), (3, 2)]) // [b, σ, b']
}

/// `K(i) C`: contraction of `F_L` and `F_R` across a bond with the bond matrix `[l, r]`.
pub fn apply_bond_hamiltonian(fl: &Tensor, fr: &Tensor, c: &Tensor) -> Result<Tensor> {
    let t = contract(fl, c, &[(2, 0)])?; // [b, w, k']
    contract(&t, fr, &[(1, 1), (2, 2)])
}

/// Partial contractions of `⟨ψ|H|ψ⟩`.
///
/// `left(i)` covers sites `0..i` and `right(i)` covers sites `i+1..N`, so the
/// effective Hamiltonian of site `i` uses `left(i)` and `right(i)`, and the
/// one of bond `b` uses `left(b)` and `right(b − 1)`.
#[derive(Clone, Debug)]
pub struct EnvironmentCache {
    left: Vec<Option<Tensor>>,
    right: Vec<Option<Tensor>>,
}

impl EnvironmentCache {
    fn empty(n: usize) -> Self {
        let mut left = vec![None; n];
        let mut right = vec![None; n];
        left[0] = Some(boundary());
        right[n - 1] = Some(boundary());
        Self { left, right }
    }

    /// Builds every environment that is valid for a site-centered state.
    pub fn build(mps: &Mps, mpo: &Mpo) -> Result<Self> {
        check_pair(mps, mpo)?;
        let c = match mps.center() {
            Some(Center::Site(c)) => c,
            _ => {
                return Err(Error::Validation(
                    "environments need a site-centered canonical state".into(),
                ))
            }
        };
        let n = mps.len();
        let mut env = Self::empty(n);
        for i in 0..c {
            let a = mps.site(i);
            env.left[i + 1] = Some(extend_left(env.left(i), a, mpo.site(i), a).map_err(|e| e.at_site(i))?);
        }
        for i in (c + 1..n).rev() {
            let a = mps.site(i);
            env.right[i - 1] = Some(extend_right(env.right(i), a, mpo.site(i), a).map_err(|e| e.at_site(i))?);
        }
        Ok(env)
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    /// Left environment of site `i`.
    pub fn left(&self, i: usize) -> &Tensor {
        self.left[i].as_ref().expect("left environment is valid")
    }

    /// Right environment of site `i`.
    pub fn right(&self, i: usize) -> &Tensor {
        self.right[i].as_ref().expect("right environment is valid")
    }

    pub fn has_left(&self, i: usize) -> bool {
        self.left[i].is_some()
    }

    pub fn has_right(&self, i: usize) -> bool {
        self.right[i].is_some()
    }

    fn set_left(&mut self, i: usize, t: Tensor) {
        self.left[i] = Some(t);
    }

    fn set_right(&mut self, i: usize, t: Tensor) {
        self.right[i] = Some(t);
    }
}

pub(crate) fn check_pair(mps: &Mps, mpo: &Mpo) -> Result<()> {
    if mps.len() != mpo.len() || mps.phys_dims() != mpo.phys_dims() {
        return Err(Error::Shape(format!(
            "MPO with physical dims {:?} does not act on MPS with physical dims {:?}",
            mpo.phys_dims(),
            mps.phys_dims()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TdvpOptions {
    pub krylov: KrylovOptions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub dt: f64,
    pub wall_time: Duration,
    pub norm_before: f64,
    pub norm_after: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    /// Krylov dimensions of every local exponential, in the order they ran.
    pub krylov_iterations: Vec<usize>,
}

fn local_energy(env: &EnvironmentCache, mpo: &Mpo, i: usize, a: &Tensor) -> Result<(f64, f64)> {
    let ha = apply_site_hamiltonian(env.left(i), mpo.site(i), env.right(i), a)?;
    let nrm = a.norm_sqr();
    Ok((a.inner(&ha).re / nrm, nrm.sqrt()))
}

/// One second-order step of length `dt`. The state is brought to center site 0 first if needed.
pub fn sweep_second_order(mps: Mps, mpo: &Mpo, dt: f64, opts: &TdvpOptions) -> Result<(Mps, SweepReport)> {
    let started = Instant::now();
    check_pair(&mps, mpo)?;
    if !dt.is_finite() {
        return Err(Error::Validation(format!("time step {dt} is not finite")));
    }
    let mut mps = mps;
    if mps.center() != Some(Center::Site(0)) {
        mps.canonicalize(0)?;
    }
    let n = mps.len();
    let mut env = EnvironmentCache::build(&mps, mpo)?;
    let (energy_before, norm_before) = local_energy(&env, mpo, 0, mps.site(0))?;
    let mut iterations = Vec::with_capacity(4 * n);

    let half = 0.5 * dt;
    let forward = C64::new(0.0, -half);
    let backward = C64::new(0.0, half);
    let kopts = opts.krylov;

    let evolve_site = |env: &EnvironmentCache, i: usize, a: &Tensor, z: C64, its: &mut Vec<usize>| -> Result<Tensor> {
        let (fl, w, fr) = (env.left(i), mpo.site(i), env.right(i));
        let (out, info) = krylov::expm_apply(|x| apply_site_hamiltonian(fl, w, fr, x), a, z, kopts)
            .map_err(|e| e.at_site(i))?;
        its.push(info.iterations);
        Ok(out)
    };
    let evolve_bond = |fl: &Tensor, fr: &Tensor, c: &Tensor, site: usize, its: &mut Vec<usize>| -> Result<Tensor> {
        let (out, info) = krylov::expm_apply(|x| apply_bond_hamiltonian(fl, fr, x), c, backward, kopts)
            .map_err(|e| e.at_site(site))?;
        its.push(info.iterations);
        Ok(out)
    };

    {
        let sites = mps.sites_mut();
        // left to right; the last site takes the full step once
        for i in 0..n {
            let z = if i + 1 == n { C64::new(0.0, -dt) } else { forward };
            let a = evolve_site(&env, i, &sites[i], z, &mut iterations)?;
            if i + 1 == n {
                sites[i] = a;
                break;
            }
            let (c, a_l) = split_left_orthogonal(&a).map_err(|e| e.at_site(i))?;
            let fl = extend_left(env.left(i), &a_l, mpo.site(i), &a_l).map_err(|e| e.at_site(i))?;
            env.set_left(i + 1, fl);
            sites[i] = a_l;
            let c = evolve_bond(env.left(i + 1), env.right(i), &c, i, &mut iterations)?;
            sites[i + 1] = contract(&c, &sites[i + 1], &[(1, 0)]).map_err(|e| e.at_site(i + 1))?;
        }
        // right to left
        for i in (0..n).rev() {
            if i + 1 < n {
                sites[i] = evolve_site(&env, i, &sites[i], forward, &mut iterations)?;
            }
            if i == 0 {
                break;
            }
            let (a_r, c) = split_right_orthogonal(&sites[i]).map_err(|e| e.at_site(i))?;
            let fr = extend_right(env.right(i), &a_r, mpo.site(i), &a_r).map_err(|e| e.at_site(i))?;
            env.set_right(i - 1, fr);
            sites[i] = a_r;
            let c = evolve_bond(env.left(i), env.right(i - 1), &c, i, &mut iterations)?;
            sites[i - 1] = contract(&sites[i - 1], &c, &[(2, 0)]).map_err(|e| e.at_site(i - 1))?;
        }
    }
    mps.set_center(Some(Center::Site(0)));
    let (energy_after, norm_after) = local_energy(&env, mpo, 0, mps.site(0))?;
    let report = SweepReport {
        dt,
        wall_time: started.elapsed(),
        norm_before,
        norm_after,
        energy_before,
        energy_after,
        krylov_iterations: iterations,
    };
    Ok((mps, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mpo::NearestNeighbor;
    use crate::ops;
    use crate::oracle;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn single_spin_matches_dense() {
        let mut h = NearestNeighbor::new(&[2]);
        h.add_onsite(0, ops::sigma_z().scaled(re(0.1))).unwrap();
        h.add_onsite(0, ops::sigma_x().scaled(re(0.7))).unwrap();
        let mpo = h.to_mpo().unwrap();
        let mut mps = Mps::product_state(&[ops::spin_up()]).unwrap();
        let dense_h = oracle::dense_from_mpo(&mpo).unwrap();
        let sys = oracle::DenseSystem::new(dense_h, oracle::product_vector(&[ops::spin_up()])).unwrap();
        let traj = oracle::ed_propagate(&sys, 0.3, 10);
        for psi in traj.iter().skip(1) {
            mps = sweep_second_order(mps, &mpo, 0.3, &TdvpOptions::default()).unwrap().0;
            let v = mps.to_dense();
            for (a, b) in v.iter().zip(psi.iter()) {
                assert!((a - b).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn identity_hamiltonian_only_adds_a_phase() {
        let mpo = crate::mpo::Mpo::identity(&[2, 3, 2]).unwrap();
        let mps = Mps::product_state(&[ops::spin_up(), ops::vacuum(3), ops::spin_up()]).unwrap();
        let before = mps.to_dense();
        let (after, report) = sweep_second_order(mps, &mpo, 0.2, &TdvpOptions::default()).unwrap();
        let phase = C64::new(0.0, -0.2).exp();
        for (a, b) in after.to_dense().iter().zip(&before) {
            assert!((a - b * phase).norm() < 1e-12);
        }
        assert!((report.norm_after - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decoupled_sites_evolve_independently() {
        let h1 = ops::sigma_x().scaled(re(0.4));
        let mut h2 = ops::sigma_z().scaled(re(0.3));
        h2.axpy(re(0.5), &ops::sigma_y());
        let mut h = NearestNeighbor::new(&[2, 2]);
        h.add_onsite(0, h1.clone()).unwrap();
        h.add_onsite(1, h2.clone()).unwrap();
        let mpo = h.to_mpo().unwrap();
        let mut mps = Mps::product_state(&[ops::spin_up(), ops::spin_up()]).unwrap();
        let up = oracle::product_vector(&[ops::spin_up()]);
        let dt = 0.1;
        for k in 1..=5 {
            mps = sweep_second_order(mps, &mpo, dt, &TdvpOptions::default()).unwrap().0;
            assert_eq!(mps.bond_dims(), vec![1, 1, 1]);
            let t = k as f64 * dt;
            let a = oracle::expm_apply(&oracle::to_matrix(&h1), &up, C64::new(0.0, -t));
            let b = oracle::expm_apply(&oracle::to_matrix(&h2), &up, C64::new(0.0, -t));
            let expect = a.kronecker(&b);
            let got = mps.to_dense();
            for (x, y) in got.iter().zip(expect.iter()) {
                assert!((x - y).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn identity_environments_give_the_norm() {
        let mpo = crate::mpo::Mpo::identity(&[2, 2]).unwrap();
        let mps = Mps::product_state(&[ops::spin_up(), ops::spin_up()]).unwrap();
        let env = EnvironmentCache::build(&mps, &mpo).unwrap();
        let a = mps.site(0);
        let ha = apply_site_hamiltonian(env.left(0), mpo.site(0), env.right(0), a).unwrap();
        assert!((a.inner(&ha) - re(1.0)).norm() < 1e-15);
    }

    #[test]
    fn mismatched_mpo_is_rejected() {
        let mpo = crate::mpo::Mpo::identity(&[2, 3]).unwrap();
        let mps = Mps::product_state(&[ops::spin_up(), ops::spin_up()]).unwrap();
        assert!(sweep_second_order(mps, &mpo, 0.1, &TdvpOptions::default()).is_err());
    }
}
