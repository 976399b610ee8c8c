use serde::{Deserialize, Serialize};

use crate::curves::{Foliation, SliceGeometry, EPS_LIGHT};
use crate::error::{Error, Result};
use crate::models::PolynomialPotential;
use crate::numerics::BoundaryMode;

/// Periodic spatial lattice of `M` sites carrying the planar geometry of
/// one spacelike slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSlice {
    pub tau_step: f64,
    /// `y(tau + M dtau) - y(tau)`.
    pub y_winding: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_dot: Vec<f64>,
    pub y_dot: Vec<f64>,
    pub potential: PolynomialPotential,
}

impl LatticeSlice {
    /// Straight slice `x = x0`, `y = tau` with `sites` sites of spacing
    /// `tau_step`.
    pub fn flat(sites: usize, tau_step: f64, x0: f64, potential: PolynomialPotential) -> Result<Self> {
        let slice = Self {
            tau_step,
            y_winding: sites as f64 * tau_step,
            x: vec![x0; sites],
            y: (0..sites).map(|i| i as f64 * tau_step).collect(),
            x_dot: vec![0.0; sites],
            y_dot: vec![1.0; sites],
            potential,
        };
        slice.validate()?;
        Ok(slice)
    }

    /// Slice of a periodic foliation at parameter `alpha`.
    pub fn from_foliation(foliation: &Foliation, alpha: f64, potential: PolynomialPotential) -> Result<Self> {
        if foliation.mode != BoundaryMode::Periodic {
            return Err(Error::InvalidCurve("lattice slices must be periodic in tau".into()));
        }
        let g = foliation.slice_geometry(alpha);
        let slice = Self {
            tau_step: foliation.tau_step,
            y_winding: foliation.y_winding,
            x: g.x,
            y: g.y,
            x_dot: g.x_dot,
            y_dot: g.y_dot,
            potential,
        };
        slice.validate()?;
        Ok(slice)
    }

    pub fn sites(&self) -> usize {
        self.x.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.sites();
        if m == 0 || self.y.len() != m || self.x_dot.len() != m || self.y_dot.len() != m {
            return Err(Error::ShapeMismatch(format!("lattice slice with {m} sites")));
        }
        if !(self.tau_step > 0.0) {
            return Err(Error::InvalidCurve(format!("non-positive lattice step {}", self.tau_step)));
        }
        check_spacelike(&self.x_dot, &self.y_dot, 0)
    }

    /// Physical lattice spacing `y' * dtau`, averaged over the slice.
    pub fn spacing(&self) -> f64 {
        self.tau_step * self.y_dot.iter().sum::<f64>() / self.sites() as f64
    }

    /// True for a straight slice `x = const` with uniform `y'`.
    pub fn is_flat(&self) -> bool {
        let y0 = self.y_dot[0];
        self.x_dot.iter().all(|v| v.abs() < 1e-12) && self.y_dot.iter().all(|v| (v - y0).abs() < 1e-12)
    }
}

pub(crate) fn check_spacelike(x_dot: &[f64], y_dot: &[f64], step: usize) -> Result<()> {
    for (site, (xd, yd)) in x_dot.iter().zip(y_dot).enumerate() {
        let gap = yd * yd - xd * xd;
        if !(gap >= EPS_LIGHT) {
            return Err(Error::LightlikePoint { step, site, gap });
        }
    }
    Ok(())
}

/// Lattice realization of the functional derivatives in `z`:
/// `d/dz(tau_i) = (1/dtau) d/dz_i`, `d^2/dz(tau_i)^2 = (1/dtau^2) d^2/dz_i^2`,
/// the forward difference `(z_{i+1} - z_i)/dtau` inside the quadratic form
/// and the centered difference `(z_{i+1} - z_{i-1})/(2 dtau)` in transport
/// terms, all periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcription {
    pub first_scale: f64,
    pub second_scale: f64,
    pub next: Vec<usize>,
    pub prev: Vec<usize>,
    pub tau_step: f64,
}

impl Transcription {
    /// `(z_{i+1} - z_i) / dtau`.
    #[inline]
    pub fn forward_z_dot(&self, z: &[f64], i: usize) -> f64 {
        (z[self.next[i]] - z[i]) / self.tau_step
    }

    /// `(z_{i+1} - z_{i-1}) / (2 dtau)`.
    #[inline]
    pub fn centered_z_dot(&self, z: &[f64], i: usize) -> f64 {
        (z[self.next[i]] - z[self.prev[i]]) / (2.0 * self.tau_step)
    }
}

pub fn lattice_transcription(slice: &LatticeSlice) -> Transcription {
    let m = slice.sites();
    Transcription {
        first_scale: 1.0 / slice.tau_step,
        second_scale: 1.0 / (slice.tau_step * slice.tau_step),
        next: (0..m).map(|i| (i + 1) % m).collect(),
        prev: (0..m).map(|i| (i + m - 1) % m).collect(),
        tau_step: slice.tau_step,
    }
}

/// Per-site coefficients of `dPsi/dalpha = sum_i dtau [N_i R1_i + S_i R2_i]`
/// where `R1` is the right-hand side of the Hamiltonian equation and `R2`
/// the one of the constraint.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct GeneratorCoefficients {
    pub lapse: Vec<f64>,
    pub shift: Vec<f64>,
    /// `x'^2 - y'^2`.
    pub signature: Vec<f64>,
    /// Condition number of the per-site 2x2 system, maximized over sites.
    pub condition: f64,
}

impl GeneratorCoefficients {
    pub fn new(g: &SliceGeometry, step: usize) -> Result<Self> {
        check_spacelike(&g.x_dot, &g.y_dot, step)?;
        let m = g.x.len();
        let mut out = Self {
            lapse: Vec::with_capacity(m),
            shift: Vec::with_capacity(m),
            signature: Vec::with_capacity(m),
            condition: 1.0,
        };
        for i in 0..m {
            let (xd, yd) = (g.x_dot[i], g.y_dot[i]);
            let det = yd * yd - xd * xd;
            out.lapse.push((yd * g.x_alpha[i] - xd * g.y_alpha[i]) / det);
            out.shift.push((yd * g.y_alpha[i] - xd * g.x_alpha[i]) / det);
            out.signature.push(xd * xd - yd * yd);
            out.condition = out.condition.max((yd.abs() + xd.abs()) / (yd.abs() - xd.abs()).abs());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_site_has_no_gradient_terms() {
        let s = LatticeSlice::flat(1, 1.0, 0.0, PolynomialPotential::mass(1.0)).unwrap();
        let t = lattice_transcription(&s);
        assert_eq!(t.forward_z_dot(&[3.0], 0), 0.0);
        assert_eq!(t.centered_z_dot(&[3.0], 0), 0.0);
        assert_eq!(t.second_scale, 1.0);
    }

    #[test]
    fn doubling_step_halves_first_scale() {
        let a = lattice_transcription(&LatticeSlice::flat(4, 0.5, 0.0, PolynomialPotential::zero()).unwrap());
        let b = lattice_transcription(&LatticeSlice::flat(4, 1.0, 0.0, PolynomialPotential::zero()).unwrap());
        assert_eq!(b.first_scale, 0.5 * a.first_scale);
        assert_eq!(b.second_scale, 0.25 * a.second_scale);
    }

    #[test]
    fn periodic_neighbours() {
        let t = lattice_transcription(&LatticeSlice::flat(3, 1.0, 0.0, PolynomialPotential::zero()).unwrap());
        assert_eq!(t.next, vec![1, 2, 0]);
        assert_eq!(t.prev, vec![2, 0, 1]);
        let z = [1.0, 2.0, 4.0];
        assert_eq!(t.forward_z_dot(&z, 2), -3.0);
        assert_eq!(t.centered_z_dot(&z, 0), -1.0);
    }

    #[test]
    fn lightlike_slice_is_rejected() {
        let mut s = LatticeSlice::flat(2, 1.0, 0.0, PolynomialPotential::zero()).unwrap();
        s.x_dot = vec![0.0, 1.0];
        assert!(matches!(s.validate(), Err(Error::LightlikePoint { site: 1, .. })));
    }

    #[test]
    fn boosted_coefficients() {
        let g = SliceGeometry {
            x: vec![0.0],
            y: vec![0.0],
            x_dot: vec![0.6],
            y_dot: vec![1.0],
            x_alpha: vec![1.0],
            y_alpha: vec![0.0],
        };
        let c = GeneratorCoefficients::new(&g, 0).unwrap();
        assert!((c.lapse[0] - 1.0 / 0.64).abs() < 1e-15);
        assert!((c.shift[0] + 0.6 / 0.64).abs() < 1e-15);
        assert!((c.condition - 4.0).abs() < 1e-12);
    }
}
