//! The two-bath spin-boson problem mapped onto two bosonic chains.
//!
//! Each finite-temperature bath is replaced by a zero-temperature proxy
//! extended over negative frequencies. The proxy spectral density is
//!
//! ```text
//! J(ω, β) = J(|ω|)/2 · [1 + coth(βω/2)] · sign(ω),   −ω_c ≤ ω ≤ ω_c
//! ```
//!
//! The proxy is then mapped onto a nearest-neighbour chain whose
//! site energies and hoppings are the recurrence coefficients of the
//! polynomials orthonormal with respect to `J(ω, β) dω`.
//!
//! Site layout of the MPS and MPO:
//!
//! ```text
//! a_{La−1} … a_1 a_0  SPIN  b_0 b_1 … b_{Lb−1}
//! ```

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::mpo::{Mpo, NearestNeighbor};
use crate::mps::Mps;
use crate::ops;

/// Ohmic spectral density with a hard cutoff, `J(ω) = 2παω θ(ω_c − ω)` for `ω ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralDensity {
    alpha: f64,
    omega_c: f64,
}

impl SpectralDensity {
    pub fn ohmic(alpha: f64, omega_c: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Validation(format!("alpha must be positive, got {alpha}")));
        }
        if !(omega_c > 0.0 && omega_c.is_finite()) {
            return Err(Error::Validation(format!(
                "omega_c must be positive, got {omega_c}"
            )));
        }
        Ok(Self { alpha, omega_c })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    pub fn eval(&self, omega: f64) -> f64 {
        if (0.0..=self.omega_c).contains(&omega) {
            2.0 * std::f64::consts::PI * self.alpha * omega
        } else {
            0.0
        }
    }
}

/// Inverse temperature; zero temperature is its own variant rather than a huge float.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    pub fn validate(self) -> Result<Self> {
        match self {
            Beta::Finite(b) if !(b > 0.0) || b.is_nan() => Err(Error::Validation(format!(
                "inverse temperature must be positive, got {b}"
            ))),
            Beta::Finite(b) if b.is_infinite() => Ok(Beta::Infinite),
            other => Ok(other),
        }
    }
}

impl std::fmt::Display for Beta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Beta::Finite(b) => write!(f, "{b}"),
            Beta::Infinite => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for Beta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(Beta::Infinite);
        }
        let b: f64 = t
            .parse()
            .map_err(|_| Error::Validation(format!("cannot parse inverse temperature {s:?}")))?;
        Beta::Finite(b).validate()
    }
}

/// Zero-temperature proxy for a thermal bath.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalSpectralDensity {
    base: SpectralDensity,
    beta: Beta,
}

pub fn thermal_spectral_density(j: SpectralDensity, beta: Beta) -> Result<ThermalSpectralDensity> {
    Ok(ThermalSpectralDensity {
        base: j,
        beta: beta.validate()?,
    })
}

impl ThermalSpectralDensity {
    pub fn base(&self) -> SpectralDensity {
        self.base
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    /// Interval outside which the density vanishes.
    pub fn support(&self) -> (f64, f64) {
        let wc = self.base.omega_c;
        match self.beta {
            Beta::Infinite => (0.0, wc),
            Beta::Finite(_) => (-wc, wc),
        }
    }

    pub fn eval(&self, omega: f64) -> f64 {
        let wc = self.base.omega_c;
        if omega.abs() > wc {
            return 0.0;
        }
        match self.beta {
            Beta::Infinite => self.base.eval(omega),
            Beta::Finite(beta) => {
                if omega == 0.0 {
                    // limit of J(ω)/(1 − e^{−βω}) for the linear density
                    return 2.0 * std::f64::consts::PI * self.base.alpha / beta;
                }
                let j = self.base.eval(omega.abs());
                // 1 + coth(x) = 2/(1 − e^{−2x}),  coth(x) − 1 = 2/(e^{2x} − 1)
                if omega > 0.0 {
                    j / -(-beta * omega).exp_m1()
                } else {
                    j / (beta * omega.abs()).exp_m1()
                }
            }
        }
    }
}

/// Site energies, hoppings and system coupling of one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainCoefficients {
    /// `ω_n`, `n = 0 … N−1`
    pub site_energies: Vec<f64>,
    /// `t_n` coupling sites `n` and `n+1`, `n = 0 … N−2`
    pub hoppings: Vec<f64>,
    /// `c_0`, coupling of the system to chain site 0
    pub coupling: f64,
}

impl ChainCoefficients {
    pub fn len(&self) -> usize {
        self.site_energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.site_energies.is_empty()
    }
}

/// Quadrature controls for [`chain_coefficients_with`].
#[derive(Clone, Copy, Debug)]
pub struct Discretization {
    /// Total number of quadrature nodes on the first attempt.
    pub initial_nodes: usize,
    /// Accept once doubling the grid changes every coefficient by less than this,
    /// relative to the larger of its magnitude and `1e-4 ω_c`.
    pub rel_tol: f64,
    pub max_doublings: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            initial_nodes: 2000,
            rel_tol: 1e-9,
            max_doublings: 6,
        }
    }
}

/// Gauss–Legendre nodes and weights on `[lo, hi]`, split at 0 when the interval straddles it.
fn grid(lo: f64, hi: f64, nodes: usize) -> Vec<(f64, f64)> {
    let panels: Vec<(f64, f64)> = if lo < 0.0 && hi > 0.0 {
        vec![(lo, 0.0), (0.0, hi)]
    } else {
        vec![(lo, hi)]
    };
    let per = (nodes / panels.len()).max(1);
    let rule = GaussLegendre::new(NonZeroUsize::new(per).unwrap());
    let mut out = Vec::with_capacity(per * panels.len());
    for (a, b) in panels {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        for &(x, w) in rule.as_node_weight_pairs() {
            out.push((mid + half * x, half * w));
        }
    }
    out
}

/// Discretized Stieltjes procedure with orthonormal polynomials evaluated on the grid.
fn stieltjes(density: impl Fn(f64) -> f64, lo: f64, hi: f64, nodes: usize, n: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let pts = grid(lo, hi, nodes);
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let w: Vec<f64> = pts.iter().map(|&(x, q)| q * density(x)).collect();
    let mass: f64 = w.iter().sum();
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::Validation(format!(
            "spectral measure has non-positive mass {mass}"
        )));
    }
    let m = x.len();
    let mut polys: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    polys.push(vec![1.0 / mass.sqrt(); m]);
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(&w).map(|((p, q), wi)| p * q * wi).sum() };
    for k in 0..n {
        let pk = &polys[k];
        let xp: Vec<f64> = pk.iter().zip(&x).map(|(p, xi)| p * xi).collect();
        let a = dot(&xp, pk);
        diag.push(a);
        if k + 1 == n {
            break;
        }
        let mut q: Vec<f64> = xp.iter().zip(pk).map(|(xp, p)| xp - a * p).collect();
        if k > 0 {
            let b: f64 = off[k - 1];
            for (qi, pi) in q.iter_mut().zip(&polys[k - 1]) {
                *qi -= b * pi;
            }
        }
        // one pass of reorthogonalization keeps the recurrence honest for long chains
        for p in &polys {
            let c = dot(&q, p);
            for (qi, pi) in q.iter_mut().zip(p) {
                *qi -= c * pi;
            }
        }
        let b = dot(&q, &q).sqrt();
        if !(b > 0.0) {
            return Err(Error::Validation(format!(
                "recurrence broke down at n = {k}; the discretized measure has too few points"
            )));
        }
        off.push(b);
        polys.push(q.into_iter().map(|qi| qi / b).collect());
    }
    Ok((diag, off, mass))
}

/// Chain coefficients of `tj` for a chain of `n` sites with the default discretization.
pub fn chain_coefficients(tj: &ThermalSpectralDensity, n: usize) -> Result<ChainCoefficients> {
    chain_coefficients_with(tj, n, Discretization::default())
}

pub fn chain_coefficients_with(
    tj: &ThermalSpectralDensity,
    n: usize,
    disc: Discretization,
) -> Result<ChainCoefficients> {
    if n == 0 {
        return Err(Error::Validation("chain length must be at least 1".into()));
    }
    let (lo, hi) = tj.support();
    let density = |w: f64| tj.eval(w);
    let mut nodes = disc.initial_nodes.max(2 * n);
    let mut prev = stieltjes(density, lo, hi, nodes, n)?;
    for _ in 0..disc.max_doublings {
        nodes *= 2;
        let next = stieltjes(density, lo, hi, nodes, n)?;
        // coefficients near zero are compared against a small fraction of the cutoff
        let floor = 1e-4 * tj.base.omega_c;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(floor);
        let change = prev
            .0
            .iter()
            .zip(&next.0)
            .chain(prev.1.iter().zip(&next.1))
            .map(|(&a, &b)| rel(a, b))
            .fold(rel(prev.2, next.2), f64::max);
        prev = next;
        if change < disc.rel_tol {
            let (site_energies, hoppings, mass) = prev;
            return Ok(ChainCoefficients {
                site_energies,
                hoppings,
                coupling: (mass / std::f64::consts::PI).sqrt(),
            });
        }
    }
    Err(Error::Validation(format!(
        "chain coefficients did not converge within {} grid doublings",
        disc.max_doublings
    )))
}

/// Parameters of the two-bath spin-boson problem. Energies share one unit (typically `ω_c = 1`).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub omega0: f64,
    pub alpha: f64,
    pub omega_c: f64,
    pub beta_a: Beta,
    pub beta_b: Beta,
    pub chain_len_a: usize,
    pub chain_len_b: usize,
    pub fock_dim: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            omega0: 0.2,
            alpha: 0.2,
            omega_c: 1.0,
            beta_a: Beta::Finite(100.0),
            beta_b: Beta::Finite(1.0),
            chain_len_a: 40,
            chain_len_b: 40,
            fock_dim: 15,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !self.omega0.is_finite() {
            return Err(Error::Validation("omega0 must be finite".into()));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Validation(format!(
                "alpha must be non-negative, got {}",
                self.alpha
            )));
        }
        if !(self.omega_c > 0.0 && self.omega_c.is_finite()) {
            return Err(Error::Validation("omega_c must be positive".into()));
        }
        self.beta_a.validate()?;
        self.beta_b.validate()?;
        if self.chain_len_a < 1 || self.chain_len_b < 1 {
            return Err(Error::Validation("chain lengths must be at least 1".into()));
        }
        if self.fock_dim < 2 {
            return Err(Error::Validation("fock_dim must be at least 2".into()));
        }
        Ok(())
    }

    pub fn layout(&self) -> Layout {
        Layout {
            len_a: self.chain_len_a,
            len_b: self.chain_len_b,
        }
    }

    /// Chain coefficients of bath a and bath b.
    ///
    /// At `alpha = 0` the chain geometry is still defined (it depends only on
    /// the shape of the measure) and the coupling is zero.
    pub fn chains(&self) -> Result<(ChainCoefficients, ChainCoefficients)> {
        self.validate()?;
        let shape_alpha = if self.alpha > 0.0 { self.alpha } else { 1.0 };
        let j = SpectralDensity::ohmic(shape_alpha, self.omega_c)?;
        let mut a = chain_coefficients(&thermal_spectral_density(j, self.beta_a)?, self.chain_len_a)?;
        let mut b = chain_coefficients(&thermal_spectral_density(j, self.beta_b)?, self.chain_len_b)?;
        if self.alpha == 0.0 {
            a.coupling = 0.0;
            b.coupling = 0.0;
        }
        Ok((a, b))
    }
}

/// Positions of the spin and chain modes along the MPS.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub len_a: usize,
    pub len_b: usize,
}

impl Layout {
    pub fn num_sites(&self) -> usize {
        self.len_a + self.len_b + 1
    }

    pub fn spin(&self) -> usize {
        self.len_a
    }

    /// Position of chain-a mode `n` (mode 0 is next to the spin).
    pub fn site_a(&self, n: usize) -> usize {
        assert!(n < self.len_a);
        self.len_a - 1 - n
    }

    pub fn site_b(&self, n: usize) -> usize {
        assert!(n < self.len_b);
        self.len_a + 1 + n
    }

    pub fn phys_dims(&self, fock_dim: usize) -> Vec<usize> {
        (0..self.num_sites())
            .map(|i| if i == self.spin() { 2 } else { fock_dim })
            .collect()
    }
}

/// Nearest-neighbour terms of the mapped Hamiltonian.
pub fn two_bath_terms(p: &ModelParams, a: &ChainCoefficients, b: &ChainCoefficients) -> Result<NearestNeighbor> {
    p.validate()?;
    let lay = p.layout();
    if a.len() != lay.len_a || b.len() != lay.len_b {
        return Err(Error::Validation("chain coefficients do not match chain lengths".into()));
    }
    let d = p.fock_dim;
    let mut h = NearestNeighbor::new(&lay.phys_dims(d));
    let real = |x: f64| C64::new(x, 0.0);

    h.add_onsite(lay.spin(), ops::sigma_z().scaled(real(0.5 * p.omega0)))?;

    // spin couplings to mode 0 of either chain
    if a.coupling != 0.0 {
        h.add_bond(
            lay.site_a(0),
            ops::displacement(d).scaled(real(a.coupling)),
            ops::sigma_x(),
        )?;
    }
    if b.coupling != 0.0 {
        h.add_bond(
            lay.spin(),
            ops::sigma_x().scaled(real(b.coupling)),
            ops::displacement(d),
        )?;
    }

    for (n, &w) in a.site_energies.iter().enumerate() {
        h.add_onsite(lay.site_a(n), ops::number(d).scaled(real(w)))?;
    }
    for (n, &t) in a.hoppings.iter().enumerate() {
        // mode n+1 sits to the left of mode n
        let left = lay.site_a(n + 1);
        h.add_bond(left, ops::annihilation(d).scaled(real(t)), ops::creation(d))?;
        h.add_bond(left, ops::creation(d).scaled(real(t)), ops::annihilation(d))?;
    }
    for (n, &w) in b.site_energies.iter().enumerate() {
        h.add_onsite(lay.site_b(n), ops::number(d).scaled(real(w)))?;
    }
    for (n, &t) in b.hoppings.iter().enumerate() {
        let left = lay.site_b(n);
        h.add_bond(left, ops::creation(d).scaled(real(t)), ops::annihilation(d))?;
        h.add_bond(left, ops::annihilation(d).scaled(real(t)), ops::creation(d))?;
    }
    Ok(h)
}

/// The mapped two-bath Hamiltonian as an MPO.
pub fn build_two_bath_mpo(p: &ModelParams) -> Result<Mpo> {
    let (a, b) = p.chains()?;
    two_bath_terms(p, &a, &b)?.to_mpo()
}

/// `|0⟩_a ⊗ |↑⟩ ⊗ |0⟩_b` as a bond-dimension-1 MPS.
pub fn build_initial_state(p: &ModelParams) -> Result<Mps> {
    p.validate()?;
    let lay = p.layout();
    let states: Vec<Vec<C64>> = (0..lay.num_sites())
        .map(|i| {
            if i == lay.spin() {
                ops::spin_up()
            } else {
                ops::vacuum(p.fock_dim)
            }
        })
        .collect();
    Mps::product_state(&states)
}

/// Everything needed to run the two-bath problem.
#[derive(Clone, Debug)]
pub struct TwoBathModel {
    pub params: ModelParams,
    pub layout: Layout,
    pub chain_a: ChainCoefficients,
    pub chain_b: ChainCoefficients,
    pub mpo: Mpo,
}

impl TwoBathModel {
    pub fn build(params: &ModelParams) -> Result<Self> {
        let (chain_a, chain_b) = params.chains()?;
        let mpo = two_bath_terms(params, &chain_a, &chain_b)?.to_mpo()?;
        Ok(Self {
            params: params.clone(),
            layout: params.layout(),
            chain_a,
            chain_b,
            mpo,
        })
    }

    pub fn initial_state(&self) -> Result<Mps> {
        build_initial_state(&self.params)
    }

    /// `chain_coeffs.csv` contents: `bath,n,omega_n,t_n` with `c_0` in a leading comment.
    pub fn chain_csv(&self) -> String {
        let mut s = format!(
            "# c0_a={:e} c0_b={:e}\nbath,n,omega_n,t_n\n",
            self.chain_a.coupling, self.chain_b.coupling
        );
        for (name, c) in [("a", &self.chain_a), ("b", &self.chain_b)] {
            for (n, w) in c.site_energies.iter().enumerate() {
                match c.hoppings.get(n) {
                    Some(t) => s.push_str(&format!("{name},{n},{w:e},{t:e}\n")),
                    None => s.push_str(&format!("{name},{n},{w:e},\n")),
                }
            }
        }
        s
    }
}
