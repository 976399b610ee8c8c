//! Sampled curves in 3-space, deformations, parameterized surfaces and planar
//! foliations on uniform parameter grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::EPS_JAC;
use crate::numerics::{derivative, interpolate, BoundaryMode};

/// Minimum planar speed `|x'| + |y'|` accepted at any curve sample.
pub const EPS_TAN: f64 = 1e-8;
/// Minimum `|y'^2 - x'^2|` accepted on slices used for quantum evolution.
pub const EPS_LIGHT: f64 = 1e-6;

fn default_step_for(n: usize, mode: BoundaryMode) -> f64 {
    match mode {
        BoundaryMode::FixedEndpoints => 1.0 / (n - 1) as f64,
        BoundaryMode::Periodic => 1.0 / n as f64,
    }
}

/// Per-sample derivatives with respect to the curve parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

/// Curve `(x(tau), y(tau), z(tau))` sampled on a uniform grid.
///
/// On periodic grids `y` may wind: `y(tau + period) = y(tau) + y_winding`.
/// This is how straight spatial slices of a periodic lattice are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub mode: BoundaryMode,
    pub step: f64,
    #[serde(default)]
    pub y_winding: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl Curve {
    /// Curve on the unit parameter interval (`[0, 1]` or `[0, 1)`).
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>, mode: BoundaryMode) -> Result<Self> {
        let n = x.len();
        let step = if n > 1 { default_step_for(n, mode) } else { 1.0 };
        Self::with_step(x, y, z, mode, step, 0.0)
    }

    pub fn with_step(
        x: Vec<f64>,
        y: Vec<f64>,
        z: Vec<f64>,
        mode: BoundaryMode,
        step: f64,
        y_winding: f64,
    ) -> Result<Self> {
        let curve = Self {
            mode,
            step,
            y_winding,
            x,
            y,
            z,
        };
        curve.validate()?;
        Ok(curve)
    }

    /// Samples `f(tau)` on the unit interval grid with `n` samples.
    pub fn from_fn(n: usize, mode: BoundaryMode, f: impl Fn(f64) -> (f64, f64, f64)) -> Result<Self> {
        let step = default_step_for(n.max(2), mode);
        let (mut x, mut y, mut z) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for i in 0..n {
            let (a, b, c) = f(i as f64 * step);
            x.push(a);
            y.push(b);
            z.push(c);
        }
        Self::with_step(x, y, z, mode, step, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.x.len();
        if self.y.len() != n || self.z.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "curve arrays have lengths {}, {}, {}",
                n,
                self.y.len(),
                self.z.len()
            )));
        }
        if n < 5 {
            return Err(Error::InvalidCurve(format!("need at least 5 samples, got {n}")));
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidCurve(format!("non-positive step {}", self.step)));
        }
        if self.x.iter().chain(&self.y).chain(&self.z).any(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve("non-finite sample".into()));
        }
        let t = self.tangent();
        if let Some(i) = (0..n).find(|&i| t.x[i].abs() + t.y[i].abs() < EPS_TAN) {
            return Err(Error::InvalidCurve(format!(
                "planar projection is not immersed at sample {i}"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn tau(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    /// Parameter length: `(n - 1) h` for fixed grids, `n h` for periodic ones.
    pub fn period(&self) -> f64 {
        match self.mode {
            BoundaryMode::FixedEndpoints => (self.len() - 1) as f64 * self.step,
            BoundaryMode::Periodic => self.len() as f64 * self.step,
        }
    }

    /// Second-order tangent `(x', y', z')` at every sample.
    pub fn tangent(&self) -> Tangent {
        Tangent {
            x: derivative(&self.x, self.step, self.mode, 0.0),
            y: derivative(&self.y, self.step, self.mode, self.y_winding),
            z: derivative(&self.z, self.step, self.mode, 0.0),
        }
    }

    /// Evaluates the curve at an arbitrary parameter by local cubic
    /// interpolation.
    pub fn sample(&self, t: f64) -> (f64, f64, f64) {
        (
            interpolate(&self.x, self.step, self.mode, 0.0, t).0,
            interpolate(&self.y, self.step, self.mode, self.y_winding, t).0,
            interpolate(&self.z, self.step, self.mode, 0.0, t).0,
        )
    }

    /// CSV with columns `tau,x,y,z`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("tau,x,y,z\n");
        for i in 0..self.len() {
            s.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e}\n",
                self.tau(i),
                self.x[i],
                self.y[i],
                self.z[i]
            ));
        }
        s
    }
}

/// Displacement field `(dx, dy, dz)` on the samples of a curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deformation {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dz: Vec<f64>,
}

impl Deformation {
    pub fn new(dx: Vec<f64>, dy: Vec<f64>, dz: Vec<f64>) -> Result<Self> {
        if dx.len() != dy.len() || dx.len() != dz.len() {
            return Err(Error::ShapeMismatch("deformation component lengths differ".into()));
        }
        Ok(Self { dx, dy, dz })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            dx: vec![0.0; n],
            dy: vec![0.0; n],
            dz: vec![0.0; n],
        }
    }

    /// Samples `f(tau)` on the curve's grid.
    pub fn from_fn(curve: &Curve, f: impl Fn(f64) -> (f64, f64, f64)) -> Self {
        let mut d = Self::zeros(curve.len());
        for i in 0..curve.len() {
            let (a, b, c) = f(curve.tau(i));
            d.dx[i] = a;
            d.dy[i] = b;
            d.dz[i] = c;
        }
        d
    }

    pub fn len(&self) -> usize {
        self.dx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dx.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dx: self.dx.iter().map(|v| v * s).collect(),
            dy: self.dy.iter().map(|v| v * s).collect(),
            dz: self.dz.iter().map(|v| v * s).collect(),
        }
    }

    pub fn conforms_to(&self, curve: &Curve) -> Result<()> {
        if self.len() != curve.len() {
            return Err(Error::ShapeMismatch(format!(
                "deformation has {} samples, curve has {}",
                self.len(),
                curve.len()
            )));
        }
        Ok(())
    }

    pub fn vanishes_at_endpoints(&self) -> bool {
        let n = self.len();
        n > 0
            && [0, n - 1]
                .iter()
                .all(|&i| self.dx[i] == 0.0 && self.dy[i] == 0.0 && self.dz[i] == 0.0)
    }

    #[inline]
    pub(crate) fn is_zero_at(&self, i: usize) -> bool {
        self.dx[i] == 0.0 && self.dy[i] == 0.0 && self.dz[i] == 0.0
    }
}

/// Resamples `curve` at `map(tau_i)` with local cubic interpolation.
///
/// On fixed grids `map` must fix both endpoints; on periodic grids it must be
/// a strictly increasing map of one period onto one period.
pub fn reparameterize(curve: &Curve, map: impl Fn(f64) -> f64) -> Result<Curve> {
    let n = curve.len();
    let period = curve.period();
    let targets: Vec<f64> = (0..n).map(|i| map(curve.tau(i))).collect();
    for (i, pair) in targets.windows(2).enumerate() {
        if !(pair[1] > pair[0]) {
            return Err(Error::NonMonotoneMap { index: i + 1 });
        }
    }
    let tol = 1e-12 * period.max(1.0);
    match curve.mode {
        BoundaryMode::FixedEndpoints => {
            if (targets[0]).abs() > tol || (targets[n - 1] - period).abs() > tol {
                return Err(Error::NonMonotoneMap { index: 0 });
            }
        }
        BoundaryMode::Periodic => {
            if !(targets[n - 1] < targets[0] + period) {
                return Err(Error::NonMonotoneMap { index: n - 1 });
            }
        }
    }
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for t in targets {
        let t = match curve.mode {
            BoundaryMode::FixedEndpoints => t.clamp(0.0, period),
            BoundaryMode::Periodic => t,
        };
        let (a, b, c) = curve.sample(t);
        x.push(a);
        y.push(b);
        z.push(c);
    }
    // The geometric image is unchanged; a map with vanishing derivative may
    // stall the new parameterization, so immersion is not re-checked here.
    Ok(Curve {
        mode: curve.mode,
        step: curve.step,
        y_winding: curve.y_winding,
        x,
        y,
        z,
    })
}

/// Derivatives of a parameterized surface at every node.
#[derive(Debug, Clone)]
pub struct SurfaceDerivatives {
    pub x_tau: Vec<f64>,
    pub y_tau: Vec<f64>,
    pub z_tau: Vec<f64>,
    pub x_alpha: Vec<f64>,
    pub y_alpha: Vec<f64>,
    pub z_alpha: Vec<f64>,
}

impl SurfaceDerivatives {
    /// Planar sweep density `x_alpha y_tau - x_tau y_alpha`, positive when
    /// the family advances to the right of the tau direction.
    #[inline]
    pub fn sweep_density(&self, k: usize) -> f64 {
        self.x_alpha[k] * self.y_tau[k] - self.x_tau[k] * self.y_alpha[k]
    }

    /// Solves `z_tau = z_x x_tau + z_y y_tau`, `z_alpha = z_x x_alpha + z_y y_alpha`.
    pub fn slopes(&self, k: usize, eps_jac: f64) -> std::result::Result<(f64, f64), f64> {
        let det = self.x_tau[k] * self.y_alpha[k] - self.x_alpha[k] * self.y_tau[k];
        if !(det.abs() >= eps_jac) {
            return Err(det);
        }
        let zx = (self.z_tau[k] * self.y_alpha[k] - self.z_alpha[k] * self.y_tau[k]) / det;
        let zy = (self.x_tau[k] * self.z_alpha[k] - self.x_alpha[k] * self.z_tau[k]) / det;
        Ok((zx, zy))
    }
}

/// Surface `(x, y, z)(tau, alpha)` over `tau` in the unit grid and
/// `alpha` in `[0, A]`. Storage is slice-major: index `j * n_tau + i` holds
/// sample `i` of slice `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSurface {
    pub n_tau: usize,
    pub n_alpha: usize,
    pub mode: BoundaryMode,
    pub tau_step: f64,
    pub alpha_extent: f64,
    #[serde(default)]
    pub y_winding: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl ParamSurface {
    pub fn from_fn(
        n_tau: usize,
        n_alpha: usize,
        alpha_extent: f64,
        f: impl Fn(f64, f64) -> (f64, f64, f64),
    ) -> Self {
        let tau_step = default_step_for(n_tau, BoundaryMode::FixedEndpoints);
        let alpha_step = if n_alpha > 1 {
            alpha_extent / (n_alpha - 1) as f64
        } else {
            0.0
        };
        let mut s = Self {
            n_tau,
            n_alpha,
            mode: BoundaryMode::FixedEndpoints,
            tau_step,
            alpha_extent,
            y_winding: 0.0,
            x: Vec::with_capacity(n_tau * n_alpha),
            y: Vec::with_capacity(n_tau * n_alpha),
            z: Vec::with_capacity(n_tau * n_alpha),
        };
        for j in 0..n_alpha {
            for i in 0..n_tau {
                let (a, b, c) = f(i as f64 * tau_step, j as f64 * alpha_step);
                s.x.push(a);
                s.y.push(b);
                s.z.push(c);
            }
        }
        s
    }

    pub fn alpha_step(&self) -> f64 {
        if self.n_alpha > 1 {
            self.alpha_extent / (self.n_alpha - 1) as f64
        } else {
            0.0
        }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n_tau + i
    }

    pub fn check_shape(&self) -> Result<()> {
        let len = self.n_tau * self.n_alpha;
        if self.x.len() != len || self.y.len() != len || self.z.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "surface {}x{} needs {len} samples per array",
                self.n_tau, self.n_alpha
            )));
        }
        if self.n_tau < 3 || self.n_alpha < 2 {
            return Err(Error::ShapeMismatch(format!(
                "surface {}x{} is too small",
                self.n_tau, self.n_alpha
            )));
        }
        Ok(())
    }

    /// The curve at slice `j`.
    pub fn slice(&self, j: usize) -> Result<Curve> {
        let r = j * self.n_tau..(j + 1) * self.n_tau;
        Curve::with_step(
            self.x[r.clone()].to_vec(),
            self.y[r.clone()].to_vec(),
            self.z[r].to_vec(),
            self.mode,
            self.tau_step,
            self.y_winding,
        )
    }

    /// The alpha-derivative of the surface along slice `j`.
    pub fn alpha_velocity(&self, j: usize) -> Deformation {
        let d = self.derivatives();
        let r = j * self.n_tau..(j + 1) * self.n_tau;
        Deformation {
            dx: d.x_alpha[r.clone()].to_vec(),
            dy: d.y_alpha[r.clone()].to_vec(),
            dz: d.z_alpha[r].to_vec(),
        }
    }

    /// Second-order derivatives in both parameters at every node.
    pub fn derivatives(&self) -> SurfaceDerivatives {
        let (nt, na) = (self.n_tau, self.n_alpha);
        let len = nt * na;
        let mut d = SurfaceDerivatives {
            x_tau: vec![0.0; len],
            y_tau: vec![0.0; len],
            z_tau: vec![0.0; len],
            x_alpha: vec![0.0; len],
            y_alpha: vec![0.0; len],
            z_alpha: vec![0.0; len],
        };
        for j in 0..na {
            let r = j * nt..(j + 1) * nt;
            d.x_tau[r.clone()].copy_from_slice(&derivative(&self.x[r.clone()], self.tau_step, self.mode, 0.0));
            d.y_tau[r.clone()]
                .copy_from_slice(&derivative(&self.y[r.clone()], self.tau_step, self.mode, self.y_winding));
            d.z_tau[r.clone()].copy_from_slice(&derivative(&self.z[r.clone()], self.tau_step, self.mode, 0.0));
        }
        let h = self.alpha_step();
        if h > 0.0 {
            let mut col = vec![0.0; na];
            for i in 0..nt {
                for (src, dst) in [
                    (&self.x, &mut d.x_alpha),
                    (&self.y, &mut d.y_alpha),
                    (&self.z, &mut d.z_alpha),
                ] {
                    for j in 0..na {
                        col[j] = src[j * nt + i];
                    }
                    let der = derivative(&col, h, BoundaryMode::FixedEndpoints, 0.0);
                    for j in 0..na {
                        dst[j * nt + i] = der[j];
                    }
                }
            }
        }
        d
    }
}

/// Slopes `(z_x, z_y)` of the surface at node `(i, j)` (sample `i` of
/// slice `j`).
pub fn surface_slopes(surface: &ParamSurface, i: usize, j: usize) -> Result<(f64, f64)> {
    surface.check_shape()?;
    let d = surface.derivatives();
    d.slopes(surface.idx(i, j), EPS_JAC)
        .map_err(|jacobian| Error::DegenerateJacobian { i, j, jacobian })
}

/// Planar geometry of a slice of a foliation at some value of `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceGeometry {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_dot: Vec<f64>,
    pub y_dot: Vec<f64>,
    pub x_alpha: Vec<f64>,
    pub y_alpha: Vec<f64>,
}

/// One-parameter family of planar curves. Storage is slice-major as in
/// [`ParamSurface`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Foliation {
    pub n_tau: usize,
    pub n_alpha: usize,
    pub mode: BoundaryMode,
    pub tau_step: f64,
    pub alpha_extent: f64,
    #[serde(default)]
    pub y_winding: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Foliation {
    /// Samples `f(tau, alpha) -> (x, y)` with `n_tau` samples of spacing
    /// `tau_step` and `n_alpha` slices over `[0, alpha_extent]`.
    pub fn from_fn(
        n_tau: usize,
        n_alpha: usize,
        mode: BoundaryMode,
        tau_step: f64,
        alpha_extent: f64,
        y_winding: f64,
        f: impl Fn(f64, f64) -> (f64, f64),
    ) -> Result<Self> {
        if n_alpha < 2 || n_tau < 1 {
            return Err(Error::ShapeMismatch(format!(
                "foliation needs at least 2 slices and 1 sample (got {n_alpha}, {n_tau})"
            )));
        }
        let h = alpha_extent / (n_alpha - 1) as f64;
        let mut x = Vec::with_capacity(n_tau * n_alpha);
        let mut y = Vec::with_capacity(n_tau * n_alpha);
        for j in 0..n_alpha {
            for i in 0..n_tau {
                let (a, b) = f(i as f64 * tau_step, j as f64 * h);
                x.push(a);
                y.push(b);
            }
        }
        let fol = Self {
            n_tau,
            n_alpha,
            mode,
            tau_step,
            alpha_extent,
            y_winding,
            x,
            y,
        };
        fol.validate()?;
        Ok(fol)
    }

    /// Unit-interval foliation with fixed endpoints.
    pub fn unit(n_tau: usize, n_alpha: usize, alpha_extent: f64, f: impl Fn(f64, f64) -> (f64, f64)) -> Result<Self> {
        let step = default_step_for(n_tau, BoundaryMode::FixedEndpoints);
        Self::from_fn(n_tau, n_alpha, BoundaryMode::FixedEndpoints, step, alpha_extent, 0.0, f)
    }

    pub fn alpha_step(&self) -> f64 {
        self.alpha_extent / (self.n_alpha - 1) as f64
    }

    /// Every slice immersed; the sweep density never changes sign.
    pub fn validate(&self) -> Result<()> {
        let len = self.n_tau * self.n_alpha;
        if self.x.len() != len || self.y.len() != len {
            return Err(Error::ShapeMismatch("foliation sample count".into()));
        }
        let mut sign = 0.0;
        for j in 0..self.n_alpha {
            let g = self.slice_geometry(j as f64 * self.alpha_step());
            for i in 0..self.n_tau {
                if g.x_dot[i].abs() + g.y_dot[i].abs() < EPS_TAN {
                    return Err(Error::InvalidCurve(format!(
                        "foliation slice {j} is not immersed at sample {i}"
                    )));
                }
                let density = g.x_alpha[i] * g.y_dot[i] - g.x_dot[i] * g.y_alpha[i];
                if density.abs() > EPS_JAC {
                    if sign != 0.0 && density * sign < 0.0 {
                        return Err(Error::InvalidCurve(format!(
                            "foliation slices cross near slice {j}, sample {i}"
                        )));
                    }
                    sign = density.signum();
                }
            }
        }
        Ok(())
    }

    /// Geometry at an arbitrary `alpha`, interpolating across slices with
    /// local cubics; tau-derivatives use the second-order stencils.
    pub fn slice_geometry(&self, alpha: f64) -> SliceGeometry {
        let n = self.n_tau;
        let h = self.alpha_step();
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut x_alpha = vec![0.0; n];
        let mut y_alpha = vec![0.0; n];
        let mut col = vec![0.0; self.n_alpha];
        for i in 0..n {
            for (src, val, der) in [(&self.x, &mut x, &mut x_alpha), (&self.y, &mut y, &mut y_alpha)] {
                for j in 0..self.n_alpha {
                    col[j] = src[j * n + i];
                }
                if h > 0.0 {
                    let (v, d) = interpolate(&col, h, BoundaryMode::FixedEndpoints, 0.0, alpha);
                    val[i] = v;
                    der[i] = d;
                } else {
                    val[i] = col[0];
                }
            }
        }
        let (x_dot, y_dot) = if n >= 2 {
            (
                derivative(&x, self.tau_step, self.mode, 0.0),
                derivative(&y, self.tau_step, self.mode, self.y_winding),
            )
        } else {
            // single periodic site: the slice is a straight circle of length y_winding
            (vec![0.0], vec![self.y_winding / self.tau_step])
        };
        SliceGeometry {
            x,
            y,
            x_dot,
            y_dot,
            x_alpha,
            y_alpha,
        }
    }

    /// True when every slice is a straight line `x = const` translated
    /// uniformly in `x` (flat spatial slices, uniform lapse, zero shift).
    pub fn is_flat(&self) -> bool {
        (0..self.n_alpha).all(|j| {
            let g = self.slice_geometry(j as f64 * self.alpha_step());
            let xa0 = g.x_alpha[0];
            let yd0 = g.y_dot[0];
            (0..self.n_tau).all(|i| {
                g.x_dot[i].abs() < 1e-12
                    && g.y_alpha[i].abs() < 1e-12
                    && (g.x_alpha[i] - xa0).abs() < 1e-12
                    && (g.y_dot[i] - yd0).abs() < 1e-12
            })
        })
    }
}

/// Surface traced by the foliation when each node carries the field value
/// `field[j * n_tau + i]`.
pub fn sweep(foliation: &Foliation, field: &[f64]) -> Result<ParamSurface> {
    let len = foliation.n_tau * foliation.n_alpha;
    if field.len() != len {
        return Err(Error::ShapeMismatch(format!(
            "field has {} values, foliation has {len} nodes",
            field.len()
        )));
    }
    Ok(ParamSurface {
        n_tau: foliation.n_tau,
        n_alpha: foliation.n_alpha,
        mode: foliation.mode,
        tau_step: foliation.tau_step,
        alpha_extent: foliation.alpha_extent,
        y_winding: foliation.y_winding,
        x: foliation.x.clone(),
        y: foliation.y.clone(),
        z: field.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn straight_segment_tangent_is_exact() {
        let c = Curve::from_fn(11, BoundaryMode::FixedEndpoints, |t| (t, 0.0, 0.0)).unwrap();
        let t = c.tangent();
        for i in 0..c.len() {
            assert!((t.x[i] - 1.0).abs() < 1e-14);
            assert_eq!(t.y[i], 0.0);
            assert_eq!(t.z[i], 0.0);
        }
    }

    #[test]
    fn circle_tangent_error() {
        let c = Curve::from_fn(101, BoundaryMode::Periodic, |t| {
            ((2.0 * PI * t).cos(), (2.0 * PI * t).sin(), 0.0)
        })
        .unwrap();
        let t = c.tangent();
        let err = (0..c.len())
            .map(|i| {
                let tau = c.tau(i);
                let ex = -2.0 * PI * (2.0 * PI * tau).sin();
                let ey = 2.0 * PI * (2.0 * PI * tau).cos();
                (t.x[i] - ex).abs().max((t.y[i] - ey).abs())
            })
            .fold(0.0, f64::max);
        assert!(err <= 1e-2, "error {err}");
    }

    #[test]
    fn quadratic_tangent_at_midpoint() {
        let c = Curve::from_fn(11, BoundaryMode::FixedEndpoints, |t| (t, 1.0, t * t)).unwrap();
        assert!((c.tangent().z[5] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn short_or_stalled_curves_are_rejected() {
        assert!(Curve::from_fn(4, BoundaryMode::FixedEndpoints, |t| (t, 0.0, 0.0)).is_err());
        assert!(matches!(
            Curve::from_fn(8, BoundaryMode::FixedEndpoints, |_| (0.0, 0.0, 1.0)),
            Err(Error::InvalidCurve(_))
        ));
    }

    #[test]
    fn identity_reparameterization_is_bitwise() {
        let c = Curve::from_fn(17, BoundaryMode::FixedEndpoints, |t| (t.sin(), t, t.exp())).unwrap();
        let r = reparameterize(&c, |t| t).unwrap();
        assert_eq!(r, c);
    }

    #[test]
    fn square_map_on_linear_curve() {
        let c = Curve::from_fn(21, BoundaryMode::FixedEndpoints, |t| (t, 1.0 + t, 0.0)).unwrap();
        let r = reparameterize(&c, |t| t * t).unwrap();
        for i in 0..c.len() {
            assert!((r.x[i] - c.tau(i).powi(2)).abs() <= 1e-10);
        }
    }

    #[test]
    fn non_monotone_map_is_rejected() {
        let c = Curve::from_fn(11, BoundaryMode::FixedEndpoints, |t| (t, 0.0, 0.0)).unwrap();
        assert!(matches!(
            reparameterize(&c, |t| 4.0 * t * (1.0 - t)),
            Err(Error::NonMonotoneMap { .. })
        ));
        assert!(matches!(
            reparameterize(&c, |t| 0.5 * t),
            Err(Error::NonMonotoneMap { .. })
        ));
    }

    #[test]
    fn slope_examples() {
        let s = ParamSurface::from_fn(9, 9, 1.0, |t, a| (t, a, t));
        assert_eq!(surface_slopes(&s, 4, 4).unwrap(), (1.0, 0.0));
        let s = ParamSurface::from_fn(9, 9, 1.0, |t, a| (t, a, 3.0 * t + 4.0 * a));
        let (zx, zy) = surface_slopes(&s, 2, 7).unwrap();
        assert!((zx - 3.0).abs() < 1e-13 && (zy - 4.0).abs() < 1e-13);
        let s = ParamSurface::from_fn(9, 9, 1.0, |t, a| (t + a, a, t * t));
        let (zx, zy) = surface_slopes(&s, 4, 3).unwrap();
        assert!((zx - 1.0).abs() < 1e-13 && (zy + 1.0).abs() < 1e-13);
    }

    #[test]
    fn degenerate_surface_slope_errors() {
        let s = ParamSurface::from_fn(9, 9, 1.0, |t, _| (t, 0.0, t));
        assert!(matches!(
            surface_slopes(&s, 3, 3),
            Err(Error::DegenerateJacobian { .. })
        ));
    }

    #[test]
    fn flat_sweep_examples() {
        let f = Foliation::unit(33, 9, 1.0, |t, a| (a, t)).unwrap();
        let zero = vec![0.0; 33 * 9];
        let s = sweep(&f, &zero).unwrap();
        assert_eq!(surface_slopes(&s, 10, 4).unwrap(), (0.0, 0.0));

        let field: Vec<f64> = (0..9)
            .flat_map(|_| (0..33).map(|i| (2.0 * PI * i as f64 / 32.0).sin()))
            .collect();
        let s = sweep(&f, &field).unwrap();
        for i in [0, 8, 16, 25, 32] {
            let (zx, zy) = surface_slopes(&s, i, 3).unwrap();
            let tau = i as f64 / 32.0;
            assert!(zx.abs() < 1e-12);
            assert!((zy - 2.0 * PI * (2.0 * PI * tau).cos()).abs() < 0.1);
        }
        assert!(matches!(sweep(&f, &[0.0; 3]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn crossing_foliation_is_rejected() {
        let bad = Foliation::unit(9, 9, 1.0, |t, a| ((a - 0.5) * (a - 0.5), t));
        assert!(bad.is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let c = Curve::from_fn(5, BoundaryMode::FixedEndpoints, |t| (t, 0.0, 0.0)).unwrap();
        let csv = c.to_csv();
        assert!(csv.starts_with("tau,x,y,z\n"));
        assert_eq!(csv.lines().count(), 6);
    }
}
