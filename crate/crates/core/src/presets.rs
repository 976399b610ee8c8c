//! Named analytic configurations with closed-form extremals and actions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curves::{Curve, ParamSurface};
use crate::eikonal::{momenta_from_slopes, MomentaField, SideData, StripRegion};
use crate::error::{Error, Result};
use crate::models::{LagrangianModel, PolynomialPotential};
use crate::numerics::BoundaryMode;

const PLANE_WAVE_HALF_WIDTH: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    HarmonicXy,
    PlaneWave,
    FlatStrip,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::HarmonicXy, Preset::PlaneWave, Preset::FlatStrip];

    pub fn name(self) -> &'static str {
        match self {
            Preset::HarmonicXy => "harmonic-xy",
            Preset::PlaneWave => "plane-wave",
            Preset::FlatStrip => "flat-strip",
        }
    }

    pub fn definition(self) -> &'static str {
        match self {
            Preset::HarmonicXy => {
                "F = (z_x^2 + z_y^2)/2, p = 0; strip 0 <= x <= 1, 0 <= y <= 1; \
                 C0: x = 0, z = 0; C1: x = 1, z = y; sides z = xy; extremal z = xy, S = 1/3"
            }
            Preset::PlaneWave => {
                "F = (z_x^2 - z_y^2)/2 - z^2/2; strip -0.3 <= x <= 0.3, 0 <= y <= 1; \
                 boundary data from z = cos x; extremal z = cos x, S = -sin(0.6)/2"
            }
            Preset::FlatStrip => {
                "F = (z_x^2 - z_y^2)/2 - z^2/2; unit square swept by x = alpha, y = tau; \
                 z = 1; J = T = -1/2"
            }
        }
    }

    /// The identity each preset is built to exercise.
    pub fn exercises(self) -> &'static str {
        match self {
            Preset::HarmonicXy => "momenta of the eikonal from the extremal slopes (finite differences of S)",
            Preset::PlaneWave => "Hamilton-Jacobi equation of the scalar field on extremals",
            Preset::FlatStrip => "action integral and propagation time (T = J)",
        }
    }

    pub fn model(self) -> LagrangianModel {
        match self {
            Preset::HarmonicXy => LagrangianModel::elliptic(PolynomialPotential::zero()),
            Preset::PlaneWave | Preset::FlatStrip => LagrangianModel::hyperbolic(PolynomialPotential::mass(1.0)),
        }
    }

    /// Closed-form extremal `z(x, y)`.
    pub fn field(self, x: f64, y: f64) -> f64 {
        match self {
            Preset::HarmonicXy => x * y,
            Preset::PlaneWave => x.cos(),
            Preset::FlatStrip => 1.0,
        }
    }

    /// `(z_x, z_y)` of [`Preset::field`].
    pub fn gradient(self, x: f64, y: f64) -> (f64, f64) {
        match self {
            Preset::HarmonicXy => (y, x),
            Preset::PlaneWave => (-x.sin(), 0.0),
            Preset::FlatStrip => (0.0, 0.0),
        }
    }

    /// Exact action of the field over the preset's region.
    pub fn exact_action(self) -> f64 {
        match self {
            Preset::HarmonicXy => 1.0 / 3.0,
            Preset::PlaneWave => -0.5 * (2.0 * PLANE_WAVE_HALF_WIDTH).sin(),
            Preset::FlatStrip => -0.5,
        }
    }

    fn x_range(self) -> (f64, f64) {
        match self {
            Preset::PlaneWave => (-PLANE_WAVE_HALF_WIDTH, PLANE_WAVE_HALF_WIDTH),
            Preset::HarmonicXy | Preset::FlatStrip => (0.0, 1.0),
        }
    }

    /// Strip region with `n` samples per boundary curve. The flat strip has
    /// no extremal (z = 1 is not stationary for its potential) and is
    /// rejected.
    pub fn region(self, n: usize) -> Result<StripRegion> {
        if self == Preset::FlatStrip {
            return Err(Error::DegenerateRegion(
                "flat-strip is a sweep preset without an extremal field".into(),
            ));
        }
        let (x0, x1) = self.x_range();
        let c0 = Curve::from_fn(n, BoundaryMode::FixedEndpoints, |t| (x0, t, self.field(x0, t)))?;
        let c1 = Curve::from_fn(n, BoundaryMode::FixedEndpoints, |t| (x1, t, self.field(x1, t)))?;
        StripRegion::new(c0, c1, SideData::field(move |x, y| self.field(x, y)))
    }

    /// Momenta from the closed-form slopes at the samples of `curve`.
    pub fn analytic_momenta(self, curve: &Curve) -> Result<MomentaField> {
        let (zx, zy): (Vec<f64>, Vec<f64>) = (0..curve.len())
            .map(|i| self.gradient(curve.x[i], curve.y[i]))
            .unzip();
        momenta_from_slopes(&self.model(), curve, &zx, &zy)
    }

    /// The region swept from `C0` to `C1` by straight translation, carrying
    /// the closed-form field.
    pub fn surface(self, n: usize) -> ParamSurface {
        let (x0, x1) = self.x_range();
        ParamSurface::from_fn(n, n, 1.0, |t, a| {
            let x = x0 + a * (x1 - x0);
            (x, t, self.field(x, t))
        })
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidCurve(format!("unknown preset {s:?}")))
    }
}

/// A swept region `{0 <= y <= 1, x_left(y) <= x <= x_right(y)}` carrying a
/// closed-form field, sampled as `y = y_of_tau(tau)`,
/// `x = x_of(y, alpha)` with `alpha in [0, 1]`.
#[derive(Clone, Copy)]
pub struct SweepCase {
    pub name: &'static str,
    pub model: fn() -> LagrangianModel,
    pub y_of_tau: fn(f64) -> f64,
    pub x_of: fn(f64, f64) -> f64,
    pub field: fn(f64, f64) -> f64,
}

impl fmt::Debug for SweepCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SweepCase").field("name", &self.name).finish()
    }
}

impl SweepCase {
    pub fn surface(&self, n: usize) -> ParamSurface {
        ParamSurface::from_fn(n, n, 1.0, |t, a| {
            let y = (self.y_of_tau)(t);
            let x = (self.x_of)(y, a);
            (x, y, (self.field)(x, y))
        })
    }

    pub fn x_left(&self, y: f64) -> f64 {
        (self.x_of)(y, 0.0)
    }

    pub fn x_right(&self, y: f64) -> f64 {
        (self.x_of)(y, 1.0)
    }
}

fn hyperbolic_unit_mass() -> LagrangianModel {
    LagrangianModel::hyperbolic(PolynomialPotential::mass(1.0))
}

fn elliptic_free() -> LagrangianModel {
    LagrangianModel::elliptic(PolynomialPotential::zero())
}

fn elliptic_cubic() -> LagrangianModel {
    LagrangianModel::elliptic(PolynomialPotential::new(vec![0.0, 0.0, 0.5, 0.1]))
}

/// Sweeps used for the propagation-time check, two of them with a
/// nonuniform parameterization of the same kind of region.
pub fn sweep_cases() -> Vec<SweepCase> {
    use std::f64::consts::PI;
    vec![
        SweepCase {
            name: "flat-strip",
            model: hyperbolic_unit_mass,
            y_of_tau: |t| t,
            x_of: |_, a| a,
            field: |_, _| 1.0,
        },
        SweepCase {
            name: "plane-wave",
            model: hyperbolic_unit_mass,
            y_of_tau: |t| t,
            x_of: |_, a| -PLANE_WAVE_HALF_WIDTH + 2.0 * PLANE_WAVE_HALF_WIDTH * a,
            field: |x, _| x.cos(),
        },
        SweepCase {
            name: "harmonic-xy",
            model: elliptic_free,
            y_of_tau: |t| t,
            x_of: |_, a| a,
            field: |x, y| x * y,
        },
        SweepCase {
            name: "bulged-reparam-tau",
            model: hyperbolic_unit_mass,
            y_of_tau: |t| t + 0.2 * (2.0 * PI * t).sin() * t * (1.0 - t),
            x_of: |y, a| a * (1.0 + 0.25 * y * (1.0 - y)),
            field: |x, y| (x + 0.5 * y).sin(),
        },
        SweepCase {
            name: "waisted-reparam-alpha",
            model: elliptic_cubic,
            y_of_tau: |t| t,
            x_of: |y, a| (a + 0.15 * (PI * a).sin()) * (0.8 + 0.2 * (PI * y).cos()),
            field: |x, y| (-x).exp() * (1.5 * y).cos(),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("lens".parse::<Preset>().is_err());
    }

    #[test]
    fn fields_match_boundary_data() {
        for p in [Preset::HarmonicXy, Preset::PlaneWave] {
            let r = p.region(9).unwrap();
            for i in 0..9 {
                assert_eq!(r.c1.z[i], p.field(r.c1.x[i], r.c1.y[i]));
            }
        }
        assert!(Preset::FlatStrip.region(9).is_err());
    }

    #[test]
    fn harmonic_momenta_at_midpoint() {
        let r = Preset::HarmonicXy.region(33).unwrap();
        let m = Preset::HarmonicXy.analytic_momenta(&r.c1).unwrap();
        assert!((m.px[16] - 0.375).abs() < 1e-12);
        assert!((m.pz[16] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sweep_surfaces_are_valid() {
        for c in sweep_cases() {
            let s = c.surface(17);
            s.check_shape().unwrap();
            for k in 0..17 {
                assert!(c.x_right(k as f64 / 16.0) > c.x_left(k as f64 / 16.0));
            }
        }
    }
}
