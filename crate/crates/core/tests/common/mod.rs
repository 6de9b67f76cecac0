#![allow(dead_code)]

use adaptive_tdvp::mpo::{Mpo, NearestNeighbor};
use adaptive_tdvp::mps::Mps;
use adaptive_tdvp::tensor::Tensor;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_c64(rng: &mut impl Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_tensor(rng: &mut impl Rng, dims: &[usize]) -> Tensor {
    let n = dims.iter().product();
    Tensor::from_vec(dims, (0..n).map(|_| random_c64(rng)).collect()).unwrap()
}

pub fn random_hermitian(rng: &mut impl Rng, d: usize) -> Tensor {
    let mut h = Tensor::zeros(&[d, d]);
    for i in 0..d {
        for j in i..d {
            let z = if i == j {
                C64::new(rng.gen_range(-1.0..1.0), 0.0)
            } else {
                random_c64(rng)
            };
            h.set(&[i, j], z);
            h.set(&[j, i], z.conj());
        }
    }
    h
}

/// Random MPS with the given physical dimensions and internal bonds no larger than `max_bond`.
///
/// Bonds respect the structural limits, so every tensor can be full rank.
pub fn random_mps(rng: &mut impl Rng, phys: &[usize], max_bond: usize) -> Mps {
    let n = phys.len();
    let mut bonds = vec![1usize; n + 1];
    for b in 1..n {
        let left: usize = phys[..b].iter().product();
        let right: usize = phys[b..].iter().product();
        let cap = left.min(right).min(max_bond);
        bonds[b] = rng.gen_range(1..=cap);
    }
    // keep each bond within reach of its neighbours
    for b in 1..n {
        bonds[b] = bonds[b].min(bonds[b - 1] * phys[b - 1]);
    }
    for b in (1..n).rev() {
        bonds[b] = bonds[b].min(bonds[b + 1] * phys[b]);
    }
    let sites = (0..n)
        .map(|i| random_tensor(rng, &[bonds[i], phys[i], bonds[i + 1]]))
        .collect();
    Mps::from_sites(sites).unwrap()
}

/// Random Hermitian nearest-neighbour Hamiltonian as an MPO.
pub fn random_nn_mpo(rng: &mut impl Rng, phys: &[usize]) -> Mpo {
    let mut nn = NearestNeighbor::new(phys);
    for (i, &d) in phys.iter().enumerate() {
        nn.add_onsite(i, random_hermitian(rng, d)).unwrap();
        if i + 1 < phys.len() {
            let l = random_hermitian(rng, d);
            let r = random_hermitian(rng, phys[i + 1]);
            nn.add_bond(i, l, r).unwrap();
        }
    }
    nn.to_mpo().unwrap()
}

pub fn normalized(v: &[C64]) -> Vec<C64> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter().map(|z| z / n).collect()
}

/// `1 − |⟨a|b⟩| / (‖a‖ ‖b‖)`.
pub fn infidelity(a: &[C64], b: &[C64]) -> f64 {
    let (a, b) = (normalized(a), normalized(b));
    let ov: C64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
    1.0 - ov.norm()
}

pub fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// `[sz, sx, sy, J_a, J_b]` from exact diagonalization at `t = 0, dt, …, steps·dt`.
pub fn ed_reference(p: &adaptive_tdvp::model::ModelParams, dt: f64, steps: usize) -> Vec<[f64; 5]> {
    use adaptive_tdvp::oracle::{ed_propagate, expectation, product_vector, two_bath_dense, DenseObservables, DenseSystem};
    use adaptive_tdvp::ops;

    let (a, b) = p.chains().unwrap();
    let h = two_bath_dense(p, &a, &b).unwrap();
    let lay = p.layout();
    let locals: Vec<Vec<C64>> = (0..lay.num_sites())
        .map(|i| if i == lay.spin() { ops::spin_up() } else { ops::vacuum(p.fock_dim) })
        .collect();
    let sys = DenseSystem::new(h, product_vector(&locals)).unwrap();
    let obs = DenseObservables::new(p).unwrap();
    ed_propagate(&sys, dt, steps)
        .iter()
        .map(|psi| {
            [&obs.sz, &obs.sx, &obs.sy, &obs.flux_a, &obs.flux_b].map(|o| expectation(o, psi).re)
        })
        .collect()
}

pub fn observables_row(o: &adaptive_tdvp::observables::ObservableSet) -> [f64; 5] {
    [o.sz, o.sx, o.sy, o.flux_a, o.flux_b]
}

/// Largest deviation over time and observables.
pub fn max_trajectory_error(traj: &[adaptive_tdvp::observables::ObservableSet], reference: &[[f64; 5]]) -> f64 {
    assert_eq!(traj.len(), reference.len());
    traj.iter()
        .zip(reference)
        .flat_map(|(o, r)| observables_row(o).into_iter().zip(*r).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}
