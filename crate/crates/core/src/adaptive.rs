//! Adaptive bond dimensions for one-site TDVP.
//!
//! Before every step the state is probed at enlarged bond dimensions. For
//! each internal bond `b` the convergence measure
//!
//! ```text
//! f(D̃) = ‖H(b−1) A_C(b−1)‖² + ‖K(b) C(b)‖² + ‖H(b) A_C(b)‖²
//! ```
//!
//! is evaluated with bond `b` enlarged to `D̃` by orthogonal-complement
//! states and every other bond at its current size. The three tensors are
//! computed once at the largest probed `D̃` and truncated for the smaller
//! ones. The new dimension is the smallest `D` with
//! `f(D + 1)/f(D) − 1 ≤ p`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mpo::Mpo;
use crate::mps::{extend_left, extend_right, split_left_orthogonal, Center, Mps};
use crate::qr::complement_columns;
use crate::tdvp::{apply_bond_hamiltonian, apply_site_hamiltonian, check_pair, EnvironmentCache};
use crate::tensor::{contract, Tensor};

/// `count` new rows for a right-orthogonal site, orthonormal to its existing rows.
fn complement_rows(a_r: &Tensor, count: usize) -> Result<Option<Tensor>> {
    let (dl, d, dr) = (a_r.dims()[0], a_r.dims()[1], a_r.dims()[2]);
    let m = a_r.clone().reshape(&[dl, d * dr])?.adjoint();
    Ok(match complement_columns(&m, count)? {
        Some(q2) => Some(q2.adjoint().reshape(&[count, d, dr])?),
        None => None,
    })
}

/// Appends `extra` below the rows (left index) of `a`.
fn stack_rows(a: &Tensor, extra: &Tensor) -> Tensor {
    let mut dims = a.dims().to_vec();
    dims[0] += extra.dims()[0];
    let mut data = Vec::with_capacity(a.len() + extra.len());
    data.extend_from_slice(a.data());
    data.extend_from_slice(extra.data());
    Tensor::from_vec(&dims, data).expect("sizes add up")
}

/// Right-orthogonal site grown to `new_d` rows with complement states.
fn grow_right_orthogonal(a_r: &Tensor, new_d: usize) -> Result<Tensor> {
    let extra = new_d - a_r.dims()[0];
    Ok(match complement_rows(a_r, extra)? {
        Some(rows) => stack_rows(a_r, &rows),
        None => a_r.clone(),
    })
}

/// Left-orthogonal site grown to `new_d` columns with complement states.
fn grow_left_orthogonal(a_l: &Tensor, new_d: usize) -> Result<Tensor> {
    let (dl, d, dr) = (a_l.dims()[0], a_l.dims()[1], a_l.dims()[2]);
    let m = a_l.clone().reshape(&[dl * d, dr])?;
    let Some(q2) = complement_columns(&m, new_d - dr)? else {
        return Ok(a_l.clone());
    };
    let extra = new_d - dr;
    let mut out = Tensor::zeros(&[dl * d, new_d]);
    {
        let dst = out.data_mut();
        for row in 0..dl * d {
            dst[row * new_d..row * new_d + dr].copy_from_slice(&m.data()[row * dr..(row + 1) * dr]);
            dst[row * new_d + dr..(row + 1) * new_d]
                .copy_from_slice(&q2.data()[row * extra..(row + 1) * extra]);
        }
    }
    out.reshape(&[dl, d, new_d])
}

fn pad_axis(a: &Tensor, axis: usize, new: usize) -> Tensor {
    let mut dims = a.dims().to_vec();
    dims[axis] = new;
    a.padded(&dims)
}

/// Enlarges internal bond `b` to `new_d` without changing the represented state.
///
/// When the orthogonality center lies left of the bond, site `b` receives
/// complement rows and site `b − 1` zero columns; otherwise site `b − 1`
/// receives complement columns and site `b` zero rows. Either way both flanks
/// keep their orthogonality.
pub fn subspace_expand(mps: &Mps, b: usize, new_d: usize) -> Result<Mps> {
    if b == 0 || b >= mps.len() {
        return Err(Error::Validation(format!("bond {b} is not internal")));
    }
    let current = mps.site(b).dims()[0];
    if new_d < current {
        return Err(Error::Validation(format!(
            "bond {b} cannot shrink from {current} to {new_d}"
        )));
    }
    let cap = mps.structural_cap(b);
    if new_d > cap {
        return Err(Error::Validation(format!(
            "bond {b} cannot exceed its structural cap {cap}, asked for {new_d}"
        )));
    }
    let mut out = mps.clone();
    if new_d == current {
        return Ok(out);
    }
    let c = match out.center() {
        Some(Center::Site(c)) => c,
        Some(Center::Bond(cb)) => {
            out.canonicalize(cb)?;
            cb
        }
        None => {
            out.canonicalize(0)?;
            0
        }
    };
    let sites = out.sites_mut();
    if c < b {
        sites[b] = grow_right_orthogonal(&sites[b], new_d)?;
        sites[b - 1] = pad_axis(&sites[b - 1], 2, new_d);
    } else {
        sites[b - 1] = grow_left_orthogonal(&sites[b - 1], new_d)?;
        sites[b] = pad_axis(&sites[b], 0, new_d);
    }
    Ok(out)
}

/// Expands every bond towards `d_max` (or its structural cap) until nothing changes.
pub fn embed(mps: &Mps, d_max: usize) -> Result<Mps> {
    let mut out = mps.clone();
    loop {
        let mut changed = false;
        for b in 1..out.len() {
            let target = d_max.min(out.structural_cap(b));
            if target > out.site(b).dims()[0] {
                out = subspace_expand(&out, b, target)?;
                changed = true;
            }
        }
        if !changed {
            return Ok(out);
        }
    }
}

/// `f(D̃)` of one bond for consecutive `D̃` starting at the current dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceCurve {
    pub bond: usize,
    pub current: usize,
    /// Largest dimension the bond can reach with its neighbours at their current sizes.
    pub cap: usize,
    /// `values[k] = f(current + k)`.
    pub values: Vec<f64>,
}

impl ConvergenceCurve {
    pub fn max_dim(&self) -> usize {
        self.current + self.values.len() - 1
    }

    pub fn f(&self, d: usize) -> Option<f64> {
        d.checked_sub(self.current).and_then(|k| self.values.get(k).copied())
    }

    /// `(D̃, f(D̃))` pairs.
    pub fn points(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().map(|(k, &v)| (self.current + k, v))
    }
}

/// Gauge data shared by all bonds: right-orthogonal sites, centers and both environments.
struct Snapshot<'a> {
    mpo: &'a Mpo,
    right: Vec<Tensor>,
    centers: Vec<Tensor>,
    env_right: EnvironmentCache,
    env_left: Vec<Tensor>,
}

impl<'a> Snapshot<'a> {
    /// `mps` must be centered on site 0.
    fn new(mps: &Mps, mpo: &'a Mpo) -> Result<Self> {
        let n = mps.len();
        let env_right = EnvironmentCache::build(mps, mpo)?;
        let right = mps.sites().to_vec();
        let mut centers = Vec::with_capacity(n);
        let mut env_left = Vec::with_capacity(n);
        env_left.push(
            Tensor::scalar(num_complex::Complex64::new(1.0, 0.0)).reshape(&[1, 1, 1])?,
        );
        let mut a_c = right[0].clone();
        for i in 0..n {
            centers.push(a_c.clone());
            if i + 1 == n {
                break;
            }
            let (c, a_l) = split_left_orthogonal(&a_c).map_err(|e| e.at_site(i))?;
            env_left.push(extend_left(&env_left[i], &a_l, mpo.site(i), &a_l).map_err(|e| e.at_site(i))?);
            a_c = contract(&c, &right[i + 1], &[(1, 0)])?;
        }
        Ok(Self {
            mpo,
            right,
            centers,
            env_right,
            env_left,
        })
    }

    fn cap(&self, b: usize) -> usize {
        let l = &self.right[b - 1];
        let r = &self.right[b];
        (l.dims()[0] * l.dims()[1]).min(r.dims()[1] * r.dims()[2])
    }

    /// `f(D̃)` for `D̃ = D … trial_max`, evaluated up to the cap and constant beyond it.
    fn curve(&self, b: usize, trial_max: usize) -> Result<ConvergenceCurve> {
        let current = self.right[b].dims()[0];
        let cap = self.cap(b);
        let trial_max = trial_max.max(current);
        let top = trial_max.min(cap).max(current);
        let w_l = self.mpo.site(b - 1);
        let w_r = self.mpo.site(b);

        // bond b probed at `top` on both sides
        let a_r = grow_right_orthogonal(&self.right[b], top)?;
        let fr = extend_right(self.env_right.right(b), &a_r, w_r, &a_r)?;
        let a_c = pad_axis(&self.centers[b - 1], 2, top);
        let h1 = apply_site_hamiltonian(&self.env_left[b - 1], w_l, &fr, &a_c)?;
        let (c, a_l) = split_left_orthogonal(&a_c)?;
        let fl = extend_left(&self.env_left[b - 1], &a_l, w_l, &a_l)?;
        let k = apply_bond_hamiltonian(&fl, &fr, &c)?;
        // site b seen through the enlarged left basis of the QR above
        let a_c_next = contract(&c, &a_r, &[(1, 0)])?;
        let h3 = apply_site_hamiltonian(&fl, w_r, self.env_right.right(b), &a_c_next)?;

        // prefix sums over the probed index give exact monotonicity
        let mut s1 = vec![0.0; top + 1];
        {
            let (dl, d) = (h1.dims()[0], h1.dims()[1]);
            for x in 0..dl * d {
                for j in 0..top {
                    s1[j + 1] += h1.data()[x * top + j].norm_sqr();
                }
            }
        }
        let mut s3 = vec![0.0; top + 1];
        {
            let per = h3.len() / top;
            for i in 0..top {
                s3[i + 1] = h3.data()[i * per..(i + 1) * per].iter().map(|z| z.norm_sqr()).sum();
            }
        }
        let kd = k.data();
        let mut values = Vec::with_capacity(trial_max - current + 1);
        let (mut f1, mut f2, mut f3) = (0.0f64, 0.0f64, 0.0f64);
        for n in 1..=top {
            let j = n - 1;
            f1 += s1[n];
            f3 += s3[n];
            // grow the K block by its last row and column
            let mut edge = 0.0;
            for i in 0..j {
                edge += kd[i * top + j].norm_sqr() + kd[j * top + i].norm_sqr();
            }
            edge += kd[j * top + j].norm_sqr();
            f2 += edge;
            if n >= current {
                values.push(f1 + f2 + f3);
            }
        }
        let last = *values.last().expect("at least the current dimension");
        values.resize(trial_max - current + 1, last);
        Ok(ConvergenceCurve {
            bond: b,
            current,
            cap,
            values,
        })
    }
}

fn centered_at_zero(mps: &Mps) -> Result<std::borrow::Cow<'_, Mps>> {
    if mps.center() == Some(Center::Site(0)) {
        Ok(std::borrow::Cow::Borrowed(mps))
    } else {
        let mut m = mps.clone();
        m.canonicalize(0)?;
        Ok(std::borrow::Cow::Owned(m))
    }
}

/// Convergence curve of bond `b` probed up to `trial_max`.
pub fn convergence_measure(mps: &Mps, mpo: &Mpo, b: usize, trial_max: usize) -> Result<ConvergenceCurve> {
    check_pair(mps, mpo)?;
    if b == 0 || b >= mps.len() {
        return Err(Error::Validation(format!("bond {b} is not internal")));
    }
    let m = centered_at_zero(mps)?;
    Snapshot::new(&m, mpo)?.curve(b, trial_max)
}

/// Curves of the internal bonds, probed up to `trial_max(b, current)`; bonds are handled in parallel.
///
/// Bonds whose window holds only the current dimension cannot grow and are skipped.
pub fn convergence_curves<F>(mps: &Mps, mpo: &Mpo, trial_max: F) -> Result<Vec<ConvergenceCurve>>
where
    F: Fn(usize, usize) -> usize + Sync,
{
    check_pair(mps, mpo)?;
    let windows: Vec<(usize, usize)> = (1..mps.len())
        .map(|b| (b, trial_max(b, mps.site(b).dims()[0])))
        .filter(|&(b, top)| top > mps.site(b).dims()[0])
        .collect();
    if windows.is_empty() {
        return Ok(Vec::new());
    }
    let m = centered_at_zero(mps)?;
    let snap = Snapshot::new(&m, mpo)?;
    windows
        .into_par_iter()
        .map(|(b, top)| snap.curve(b, top).map_err(|e| e.at_site(b)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BondChoice {
    pub bond: usize,
    pub current: usize,
    pub trial_max: usize,
    pub chosen: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionPlan {
    pub bonds: Vec<BondChoice>,
    pub precision: f64,
    pub d_lim: usize,
    pub curves: Vec<ConvergenceCurve>,
}

impl ExpansionPlan {
    pub fn changes_anything(&self) -> bool {
        self.bonds.iter().any(|c| c.chosen != c.current)
    }
}

/// Smallest `D ≥ current` with `f(D + 1)/f(D) − 1 ≤ p`, or the top of the curve.
pub fn select_dim(curve: &ConvergenceCurve, p: f64) -> usize {
    for (d, f) in curve.points() {
        let Some(next) = curve.f(d + 1) else {
            return d;
        };
        if f == 0.0 || next / f - 1.0 <= p {
            return d;
        }
    }
    curve.max_dim()
}

/// Applies the precision rule to every curve and clamps to `d_lim` and the structural caps.
pub fn select_bond_dims(curves: &[ConvergenceCurve], p: f64, d_lim: usize) -> Result<ExpansionPlan> {
    if p.is_nan() || p < 0.0 {
        return Err(Error::Validation(format!("precision must be non-negative, got {p}")));
    }
    if d_lim == 0 {
        return Err(Error::Validation("d_lim must be positive".into()));
    }
    let bonds = curves
        .iter()
        .map(|c| {
            let chosen = select_dim(c, p).min(d_lim).min(c.cap).max(c.current);
            BondChoice {
                bond: c.bond,
                current: c.current,
                trial_max: c.max_dim(),
                chosen,
            }
        })
        .collect();
    Ok(ExpansionPlan {
        bonds,
        precision: p,
        d_lim,
        curves: curves.to_vec(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveOptions {
    pub precision: f64,
    pub d_lim: usize,
    pub trial_margin: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            precision: 1e-6,
            d_lim: 60,
            trial_margin: 8,
        }
    }
}

/// Probes, selects and expands every internal bond.
///
/// If no bond grows, the input state is returned untouched.
pub fn bond_update_step(mps: &Mps, mpo: &Mpo, opts: &AdaptiveOptions) -> Result<(Mps, ExpansionPlan)> {
    let margin = opts.trial_margin;
    let d_lim = opts.d_lim;
    let curves = convergence_curves(mps, mpo, |_, current| (current + margin).min(d_lim).max(current))?;
    let plan = select_bond_dims(&curves, opts.precision, d_lim)?;
    if !plan.changes_anything() {
        return Ok((mps.clone(), plan));
    }
    let mut out = centered_at_zero(mps)?.into_owned();
    // left to right, so each complement is built on the unexpanded right index
    for c in &plan.bonds {
        if c.chosen > c.current {
            out = subspace_expand(&out, c.bond, c.chosen).map_err(|e| e.at_site(c.bond))?;
        }
    }
    Ok((out, plan))
}

/// `bond,D,f` rows for a set of curves.
pub fn fcurves_rows(curves: &[ConvergenceCurve]) -> Vec<(usize, usize, f64)> {
    curves
        .iter()
        .flat_map(|c| c.points().map(move |(d, f)| (c.bond, d, f)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::{left_orthogonality_error, right_orthogonality_error};
    use crate::ops;
    use num_complex::Complex64 as C64;

    fn curve(values: &[f64]) -> ConvergenceCurve {
        ConvergenceCurve {
            bond: 1,
            current: 1,
            cap: 100,
            values: values.to_vec(),
        }
    }

    #[test]
    fn precision_rule_example() {
        let c = curve(&[1.0, 2.0, 2.0000000001]);
        assert_eq!(select_dim(&c, 1e-6), 2);
    }

    #[test]
    fn constant_curve_keeps_dimension() {
        let c = curve(&[3.0; 5]);
        assert_eq!(select_dim(&c, 0.0), 1);
    }

    #[test]
    fn zero_curve_is_converged() {
        let c = curve(&[0.0, 0.0, 1.0]);
        assert_eq!(select_dim(&c, 1e-6), 1);
    }

    #[test]
    fn growing_curve_hits_the_limit() {
        let c = curve(&(1..=100).map(|x| x as f64).collect::<Vec<_>>());
        let plan = select_bond_dims(&[c], 1e-6, 60).unwrap();
        assert_eq!(plan.bonds[0].chosen, 60);
    }

    #[test]
    fn expansion_of_product_state_is_exact() {
        let mps = Mps::product_state(&[ops::vacuum(3), ops::spin_up(), ops::vacuum(3)]).unwrap();
        let before = mps.to_dense();
        let out = subspace_expand(&mps, 1, 2).unwrap();
        assert_eq!(out.bond_dims(), vec![1, 2, 1, 1]);
        assert_eq!(out.to_dense(), before);
        assert!(right_orthogonality_error(out.site(1)) < 1e-14);
        let out = subspace_expand(&out, 2, 2).unwrap();
        assert!(right_orthogonality_error(out.site(2)) < 1e-14);
        assert!(subspace_expand(&out, 1, 4).is_err());
    }

    #[test]
    fn left_flank_expansion_keeps_left_orthogonality() {
        let mut mps = Mps::product_state(&[ops::vacuum(3), ops::spin_up(), ops::vacuum(3)]).unwrap();
        mps.canonicalize(2).unwrap();
        let out = subspace_expand(&mps, 1, 2).unwrap();
        assert!(left_orthogonality_error(out.site(0)) < 1e-14);
        assert_eq!(out.to_dense(), mps.to_dense());
    }

    #[test]
    fn identity_mpo_gives_flat_curves() {
        let mps = Mps::product_state(&[ops::vacuum(3), ops::spin_up(), ops::vacuum(3)]).unwrap();
        let mpo = Mpo::identity(&mps.phys_dims()).unwrap();
        for b in 1..3 {
            let c = convergence_measure(&mps, &mpo, b, 4).unwrap();
            for (_, f) in c.points() {
                assert!((f - 3.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn embedding_fills_the_caps() {
        let mps = Mps::product_state(&vec![ops::spin_up(); 5]).unwrap();
        let out = embed(&mps, 3).unwrap();
        assert_eq!(out.bond_dims(), vec![1, 2, 3, 3, 2, 1]);
        let ov = out.overlap(&mps).unwrap();
        assert!((ov - C64::new(1.0, 0.0)).norm() < 1e-14);
    }
}
