//! Boundary momenta of the eikonal and the identities they satisfy: the
//! reparameterization constraint, the scalar-field Hamilton–Jacobi analog,
//! and the generic elimination of the slopes.

use serde::{Deserialize, Serialize};

use crate::curves::{Curve, EPS_LIGHT};
use crate::error::{Error, Result};
use crate::models::{LagrangianModel, PolynomialPotential};

/// Densities in `tau` of the variational derivatives of the eikonal with
/// respect to `x`, `y` and `z` along a curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentaField {
    pub px: Vec<f64>,
    pub py: Vec<f64>,
    pub pz: Vec<f64>,
}

impl MomentaField {
    pub fn zeros(n: usize) -> Self {
        Self {
            px: vec![0.0; n],
            py: vec![0.0; n],
            pz: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.px.len()
    }

    pub fn is_empty(&self) -> bool {
        self.px.is_empty()
    }

    fn conforms_to(&self, curve: &Curve) -> Result<()> {
        let n = curve.len();
        if self.px.len() != n || self.py.len() != n || self.pz.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "momenta have {} samples, curve has {n}",
                self.px.len()
            )));
        }
        Ok(())
    }
}

/// Momenta from the slopes of the extremal surface at each curve sample:
///
/// ```text
/// px = y'(F - z_x F_zx) + x' z_x F_zy
/// py = -y' z_y F_zx - x'(F - z_y F_zy)
/// pz = y' F_zx - x' F_zy
/// ```
pub fn momenta_from_slopes(
    model: &LagrangianModel,
    curve: &Curve,
    zx: &[f64],
    zy: &[f64],
) -> Result<MomentaField> {
    let n = curve.len();
    if zx.len() != n || zy.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "slopes have {}/{} samples, curve has {n}",
            zx.len(),
            zy.len()
        )));
    }
    let t = curve.tangent();
    let mut m = MomentaField::zeros(n);
    for i in 0..n {
        let (x, y, z) = (curve.x[i], curve.y[i], curve.z[i]);
        let f = model.eval_lagrangian(x, y, z, zx[i], zy[i]);
        let p = model.eval_partials(x, y, z, zx[i], zy[i]);
        m.px[i] = t.y[i] * (f - zx[i] * p.f_zx) + t.x[i] * zx[i] * p.f_zy;
        m.py[i] = -t.y[i] * zy[i] * p.f_zx - t.x[i] * (f - zy[i] * p.f_zy);
        m.pz[i] = t.y[i] * p.f_zx - t.x[i] * p.f_zy;
    }
    Ok(m)
}

/// `x' px + y' py + z' pz` at every sample.
pub fn constraint_residual(curve: &Curve, momenta: &MomentaField) -> Result<Vec<f64>> {
    momenta.conforms_to(curve)?;
    let t = curve.tangent();
    Ok((0..curve.len())
        .map(|i| t.x[i] * momenta.px[i] + t.y[i] * momenta.py[i] + t.z[i] * momenta.pz[i])
        .collect())
}

/// Residual of the Hamilton–Jacobi analog for the scalar field in two
/// dimensions, `(pz^2 + z'^2)/2 + (x'^2 - y'^2) p(z) + x' py + y' px`.
pub fn hj_residual_scalar_field(
    curve: &Curve,
    momenta: &MomentaField,
    potential: &PolynomialPotential,
) -> Result<Vec<f64>> {
    momenta.conforms_to(curve)?;
    let t = curve.tangent();
    Ok((0..curve.len())
        .map(|i| {
            0.5 * (momenta.pz[i].powi(2) + t.z[i].powi(2))
                + (t.x[i].powi(2) - t.y[i].powi(2)) * potential.eval(curve.z[i])
                + t.x[i] * momenta.py[i]
                + t.y[i] * momenta.px[i]
        })
        .collect())
}

const ELIMINATION_MAX_ITER: usize = 30;

/// Eliminates the slopes from the momentum formulas.
///
/// At each sample the slopes are recovered from `y' F_zx - x' F_zy = pz`
/// and `x' z_x + y' z_y = z'` by Newton's method (one step for the built-in
/// models, whose momenta are linear in the slopes). The returned pair is
/// `(px - px(slopes), py - py(slopes))`; given the constraint, only one
/// combination is independent.
pub fn hj_residual_generic(
    model: &LagrangianModel,
    curve: &Curve,
    momenta: &MomentaField,
) -> Result<Vec<(f64, f64)>> {
    momenta.conforms_to(curve)?;
    let t = curve.tangent();
    let mut out = Vec::with_capacity(curve.len());
    for i in 0..curve.len() {
        let (x, y, z) = (curve.x[i], curve.y[i], curve.z[i]);
        let (xd, yd, zd) = (t.x[i], t.y[i], t.z[i]);
        let (mut zx, mut zy) = (0.0, 0.0);
        let mut converged = false;
        for iter in 0..ELIMINATION_MAX_ITER {
            let p = model.eval_partials(x, y, z, zx, zy);
            let r1 = yd * p.f_zx - xd * p.f_zy - momenta.pz[i];
            let r2 = xd * zx + yd * zy - zd;
            let scale = 1.0 + momenta.pz[i].abs() + zd.abs();
            if r1.abs().max(r2.abs()) <= 1e-14 * scale && iter > 0 {
                converged = true;
                break;
            }
            let h = model.eval_second_partials(x, y, z, zx, zy);
            let a11 = yd * h.zxzx - xd * h.zxzy;
            let a12 = yd * h.zxzy - xd * h.zyzy;
            let (a21, a22) = (xd, yd);
            let det = a11 * a22 - a12 * a21;
            if !(det.abs() >= EPS_LIGHT) {
                return Err(Error::LightlikePoint {
                    step: 0,
                    site: i,
                    gap: det.abs(),
                });
            }
            zx -= (a22 * r1 - a12 * r2) / det;
            zy -= (a11 * r2 - a21 * r1) / det;
        }
        if !converged || !zx.is_finite() || !zy.is_finite() {
            return Err(Error::EliminationDiverged { index: i });
        }
        let f = model.eval_lagrangian(x, y, z, zx, zy);
        let p = model.eval_partials(x, y, z, zx, zy);
        let px = yd * (f - zx * p.f_zx) + xd * zx * p.f_zy;
        let py = -yd * zy * p.f_zx - xd * (f - zy * p.f_zy);
        out.push((momenta.px[i] - px, momenta.py[i] - py));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::BoundaryMode::FixedEndpoints;

    fn hyper() -> LagrangianModel {
        LagrangianModel::hyperbolic(PolynomialPotential::mass(1.0))
    }

    fn plane_wave_line() -> Curve {
        Curve::from_fn(17, FixedEndpoints, |t| (0.0, t, 1.0)).unwrap()
    }

    #[test]
    fn momenta_on_constant_line() {
        let c = plane_wave_line();
        let zeros = vec![0.0; c.len()];
        let m = momenta_from_slopes(&hyper(), &c, &zeros, &zeros).unwrap();
        assert!(m.px.iter().all(|v| (*v + 0.5).abs() < 1e-15));
        assert!(m.py.iter().chain(&m.pz).all(|v| *v == 0.0));
        let hj = hj_residual_scalar_field(&c, &m, &hyper().potential).unwrap();
        assert!(hj.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn elliptic_hand_example() {
        let model = LagrangianModel::elliptic(PolynomialPotential::zero());
        let c = Curve::from_fn(17, FixedEndpoints, |t| (1.0, t, t)).unwrap();
        let zx: Vec<f64> = (0..c.len()).map(|i| c.tau(i)).collect();
        let zy = vec![1.0; c.len()];
        let m = momenta_from_slopes(&model, &c, &zx, &zy).unwrap();
        assert!((m.px[8] - 0.375).abs() < 1e-15);
        assert!((m.pz[8] - 0.5).abs() < 1e-15);
        let r = constraint_residual(&c, &m).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn zero_momenta_have_zero_constraint() {
        let c = plane_wave_line();
        let r = constraint_residual(&c, &MomentaField::zeros(c.len())).unwrap();
        assert!(r.iter().all(|v| *v == 0.0));
        let z = Curve::from_fn(9, FixedEndpoints, |t| (0.0, t, 0.0)).unwrap();
        let hj = hj_residual_scalar_field(&z, &MomentaField::zeros(9), &hyper().potential).unwrap();
        assert!(hj.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn generic_residual_reacts_to_pz_shift() {
        let c = plane_wave_line();
        let zeros = vec![0.0; c.len()];
        let mut m = momenta_from_slopes(&hyper(), &c, &zeros, &zeros).unwrap();
        let r = hj_residual_generic(&hyper(), &c, &m).unwrap();
        assert!(r.iter().all(|(a, b)| a.abs() < 1e-12 && b.abs() < 1e-12));
        m.pz.iter_mut().for_each(|v| *v += 0.1);
        let r = hj_residual_generic(&hyper(), &c, &m).unwrap();
        // slopes become z_x = 0.1, so px shifts by z_x^2 / 2
        assert!(r.iter().all(|(a, _)| (a - 0.005).abs() < 1e-12));
    }

    #[test]
    fn lightlike_curve_is_rejected() {
        let c = Curve::from_fn(9, FixedEndpoints, |t| (t, t, 0.0)).unwrap();
        let m = MomentaField::zeros(9);
        assert!(matches!(
            hj_residual_generic(&hyper(), &c, &m),
            Err(Error::LightlikePoint { .. })
        ));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let c = plane_wave_line();
        assert!(matches!(
            constraint_residual(&c, &MomentaField::zeros(3)),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
