use std::fmt;
use std::sync::Arc;

use crate::curves::Curve;
use crate::error::{Error, Result};
use crate::models::FieldGrid;
use crate::numerics::BoundaryMode;

/// Minimum separation `x1 - x0` between the two boundary curves.
pub const EPS_WIDTH: f64 = 1e-6;

/// Field values on the two straight side edges joining the curve endpoints.
#[derive(Clone, Default)]
pub enum SideData {
    /// Linear interpolation between the endpoint values of the two curves.
    #[default]
    Linear,
    /// Values of a prescribed function `z(x, y)`.
    Field(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for SideData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SideData::Linear => f.write_str("Linear"),
            SideData::Field(_) => f.write_str("Field(..)"),
        }
    }
}

impl SideData {
    pub fn field(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        SideData::Field(Arc::new(f))
    }
}

/// Planar strip bounded by two curves `C0` (left) and `C1` (right) that are
/// graphs over a common `y`-interval, plus the two straight side edges.
///
/// Both curves run upward (`y' > 0`), so the region lies to the left of `C1`
/// and the outward normal on `C1` is `(y', -x')`.
#[derive(Debug, Clone)]
pub struct StripRegion {
    pub c0: Curve,
    pub c1: Curve,
    pub side: SideData,
}

impl StripRegion {
    pub fn new(c0: Curve, c1: Curve, side: SideData) -> Result<Self> {
        for (name, c) in [("C0", &c0), ("C1", &c1)] {
            c.validate()?;
            if c.mode != BoundaryMode::FixedEndpoints {
                return Err(Error::DegenerateRegion(format!("{name} must have fixed endpoints")));
            }
            let t = c.tangent();
            if let Some(i) = t.y.iter().position(|v| !(*v > 0.0)) {
                return Err(Error::DegenerateRegion(format!(
                    "{name} is not a graph over y (y' <= 0 at sample {i})"
                )));
            }
        }
        let n = c0.len();
        if c1.len() != n || c0.step != c1.step {
            return Err(Error::ShapeMismatch(format!(
                "boundary curves have {} and {} samples",
                n,
                c1.len()
            )));
        }
        let scale = 1.0 + c0.y[n - 1].abs().max(c0.y[0].abs());
        if (c0.y[0] - c1.y[0]).abs() > 1e-12 * scale || (c0.y[n - 1] - c1.y[n - 1]).abs() > 1e-12 * scale {
            return Err(Error::DegenerateRegion(
                "boundary curves do not span a common y-interval".into(),
            ));
        }
        if let Some(i) = (1..n - 1).find(|&i| c1.x[i] - c0.x[i] < EPS_WIDTH) {
            return Err(Error::DegenerateRegion(format!(
                "C1 is not to the right of C0 at sample {i}"
            )));
        }
        Ok(Self { c0, c1, side })
    }

    pub fn height(&self) -> f64 {
        let n = self.c0.len();
        self.c0.y[n - 1] - self.c0.y[0]
    }

    pub fn max_width(&self) -> f64 {
        self.c0
            .x
            .iter()
            .zip(&self.c1.x)
            .map(|(a, b)| b - a)
            .fold(0.0, f64::max)
    }

    /// Copy of the region with `C1` replaced.
    pub fn with_c1(&self, c1: Curve) -> Result<Self> {
        Self::new(self.c0.clone(), c1, self.side.clone())
    }

    /// Number of grid intervals per curve interval along `tau`.
    pub fn refinement(&self, nt: usize) -> Result<usize> {
        let intervals = self.c0.len() - 1;
        if nt < 2 || !(nt - 1).is_multiple_of(intervals) {
            return Err(Error::ShapeMismatch(format!(
                "grid with {nt} tau-nodes does not refine a curve with {} samples",
                self.c0.len()
            )));
        }
        Ok((nt - 1) / intervals)
    }

    /// Logical grid on `(s, tau)`: node `(i, j)` sits at
    /// `(1 - s_i) C0(tau_j) + s_i C1(tau_j)`, with the curves interpolated
    /// linearly between samples. A sample then moves the boundary through
    /// its hat function, whose integral is the trapezoid weight. Boundary
    /// values come from the curves and the side data; interior values are
    /// the transfinite interpolation of the boundary.
    pub fn grid(&self, ns: usize, nt: usize) -> Result<FieldGrid> {
        if ns < 3 || nt < 3 {
            return Err(Error::ShapeMismatch(format!("grid {ns}x{nt} has no interior")));
        }
        let r = self.refinement(nt)?;
        let left = linear_refine(&self.c0, r);
        let right = linear_refine(&self.c1, r);
        let len = ns * nt;
        let (mut x, mut y, mut z) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
        let idx = |i: usize, j: usize| i * nt + j;
        for i in 0..ns {
            let s = i as f64 / (ns - 1) as f64;
            for j in 0..nt {
                let k = idx(i, j);
                x[k] = (1.0 - s) * left[j].0 + s * right[j].0;
                y[k] = (1.0 - s) * left[j].1 + s * right[j].1;
            }
        }
        for j in 0..nt {
            z[idx(0, j)] = left[j].2;
            z[idx(ns - 1, j)] = right[j].2;
        }
        for j in [0, nt - 1] {
            for i in 1..ns - 1 {
                let k = idx(i, j);
                z[k] = match &self.side {
                    SideData::Linear => {
                        let s = i as f64 / (ns - 1) as f64;
                        (1.0 - s) * left[j].2 + s * right[j].2
                    }
                    SideData::Field(f) => f(x[k], y[k]),
                };
            }
        }
        for i in 1..ns - 1 {
            let s = i as f64 / (ns - 1) as f64;
            for j in 1..nt - 1 {
                let t = j as f64 / (nt - 1) as f64;
                let bottom = z[idx(i, 0)];
                let top = z[idx(i, nt - 1)];
                let corners = (1.0 - s) * ((1.0 - t) * z[idx(0, 0)] + t * z[idx(0, nt - 1)])
                    + s * ((1.0 - t) * z[idx(ns - 1, 0)] + t * z[idx(ns - 1, nt - 1)]);
                z[idx(i, j)] = (1.0 - s) * left[j].2 + s * right[j].2 + (1.0 - t) * bottom + t * top - corners;
            }
        }
        FieldGrid::new(ns, nt, x, y, z)
    }
}

/// Samples of `curve` with `r - 1` linearly interpolated points inserted in
/// every interval.
fn linear_refine(curve: &Curve, r: usize) -> Vec<(f64, f64, f64)> {
    let n = curve.len();
    let at = |i: usize| (curve.x[i], curve.y[i], curve.z[i]);
    let mut out = Vec::with_capacity((n - 1) * r + 1);
    for i in 0..n - 1 {
        let (a, b) = (at(i), at(i + 1));
        for k in 0..r {
            let u = k as f64 / r as f64;
            out.push((a.0 + u * (b.0 - a.0), a.1 + u * (b.1 - a.1), a.2 + u * (b.2 - a.2)));
        }
    }
    out.push(at(n - 1));
    out
}
