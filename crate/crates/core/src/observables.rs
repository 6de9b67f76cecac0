//! Spin expectation values and junction heat-flux correlators.

use crate::error::{Error, Result};
use crate::model::Layout;
use crate::mpo::Mpo;
use crate::mps::Mps;
use crate::ops;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bath {
    A,
    B,
}

/// Everything recorded at one instant.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ObservableSet {
    pub time: f64,
    pub sz: f64,
    pub sx: f64,
    pub sy: f64,
    pub flux_a: f64,
    pub flux_b: f64,
    pub energy: f64,
    pub norm: f64,
}

impl ObservableSet {
    pub const CSV_HEADER: &'static str = "t,sz,sx,sy,Ja,Jb,energy,norm";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.time, self.sz, self.sx, self.sy, self.flux_a, self.flux_b, self.energy, self.norm
        )
    }
}

fn check_layout(mps: &Mps, layout: &Layout) -> Result<()> {
    if mps.len() != layout.num_sites() || mps.site(layout.spin()).dims()[1] != 2 {
        return Err(Error::Validation(format!(
            "state with {} sites does not match the layout ({} + spin + {})",
            mps.len(),
            layout.len_a,
            layout.len_b
        )));
    }
    Ok(())
}

/// `⟨σ_y ⊗ (a_0 + a_0†)⟩ / ⟨ψ|ψ⟩` across the junction of the spin and the chosen bath.
///
/// This is the correlator without the coupling prefactor `c_0`.
pub fn heat_flux(mps: &Mps, layout: &Layout, which: Bath) -> Result<f64> {
    check_layout(mps, layout)?;
    let site = match which {
        Bath::A => layout.site_a(0),
        Bath::B => layout.site_b(0),
    };
    let d = mps.site(site).dims()[1];
    let sy = ops::sigma_y();
    let x = ops::displacement(d);
    Ok(mps.expect_product(&[(layout.spin(), &sy), (site, &x)])?.re)
}

pub fn measure_all(mps: &Mps, mpo: &Mpo, layout: &Layout, time: f64) -> Result<ObservableSet> {
    check_layout(mps, layout)?;
    let spin = layout.spin();
    Ok(ObservableSet {
        time,
        sz: mps.expect_local(&ops::sigma_z(), spin)?.re,
        sx: mps.expect_local(&ops::sigma_x(), spin)?.re,
        sy: mps.expect_local(&ops::sigma_y(), spin)?.re,
        flux_a: heat_flux(mps, layout, Bath::A)?,
        flux_b: heat_flux(mps, layout, Bath::B)?,
        energy: mps.expect_mpo(mpo)?.re,
        norm: mps.norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelParams, TwoBathModel};

    #[test]
    fn initial_state_observables() {
        let p = ModelParams {
            chain_len_a: 3,
            chain_len_b: 2,
            fock_dim: 4,
            ..ModelParams::default()
        };
        let model = TwoBathModel::build(&p).unwrap();
        let psi = model.initial_state().unwrap();
        let obs = measure_all(&psi, &model.mpo, &model.layout, 0.0).unwrap();
        assert_eq!(obs.sz, 1.0);
        assert_eq!(obs.sx, 0.0);
        assert_eq!(obs.sy, 0.0);
        assert_eq!(obs.flux_a, 0.0);
        assert_eq!(obs.flux_b, 0.0);
        assert!((obs.energy - 0.1).abs() < 1e-14);
        assert!((obs.norm - 1.0).abs() < 1e-14);
    }

    #[test]
    fn wrong_layout_is_rejected() {
        let psi = Mps::product_state(&[ops::spin_up(), ops::vacuum(3)]).unwrap();
        let lay = Layout { len_a: 2, len_b: 2 };
        assert!(heat_flux(&psi, &lay, Bath::A).is_err());
    }

    #[test]
    fn csv_row_has_every_column() {
        let row = ObservableSet::default().csv_row();
        assert_eq!(row.split(',').count(), ObservableSet::CSV_HEADER.split(',').count());
    }
}
