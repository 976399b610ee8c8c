//! Lagrangian densities `F(x, y, z, z_x, z_y)` with polynomial potentials,
//! their exact partial derivatives, and the discrete Euler–Lagrange residual.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default lower bound on cell Jacobians of a field grid.
pub const EPS_JAC: f64 = 1e-8;

/// `p(z) = sum_k c_k z^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolynomialPotential {
    coeffs: Vec<f64>,
}

impl PolynomialPotential {
    /// Builds the potential from `c0, c1, ..`; an empty list means `p = 0`.
    pub fn new(coeffs: Vec<f64>) -> Self {
        let coeffs = if coeffs.is_empty() { vec![0.0] } else { coeffs };
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::new(vec![0.0])
    }

    /// `p(z) = -m^2 z^2 / 2`.
    pub fn mass(m: f64) -> Self {
        Self::new(vec![0.0, 0.0, -0.5 * m * m])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    /// `(p, p', p'')` at `z` by nested Horner sweeps.
    pub fn eval_with_derivatives(&self, z: f64) -> (f64, f64, f64) {
        let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            ddp = ddp * z + 2.0 * dp;
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp, ddp)
    }

    /// Returns `m` when the potential is `c0 - m^2 z^2 / 2` (trailing zeros allowed).
    pub fn as_mass_term(&self) -> Option<f64> {
        let c = &self.coeffs;
        let get = |k: usize| c.get(k).copied().unwrap_or(0.0);
        if c.iter().skip(3).any(|v| *v != 0.0) || get(1) != 0.0 || get(2) >= 0.0 {
            return None;
        }
        Some((-2.0 * get(2)).sqrt())
    }
}

/// The two built-in Lagrangian families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// `F = (z_x^2 - z_y^2) / 2 + p(z)`
    ScalarHyperbolic,
    /// `F = (z_x^2 + z_y^2) / 2 + p(z)`
    ScalarElliptic,
}

/// A Lagrangian density with closed-form partial derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagrangianModel {
    pub kind: ModelKind,
    pub potential: PolynomialPotential,
}

/// `(F_zx, F_zy, F_z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partials {
    pub f_zx: f64,
    pub f_zy: f64,
    pub f_z: f64,
}

/// Second partials of `F` in the jet variables `(z, z_x, z_y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondPartials {
    pub zz: f64,
    pub zxzx: f64,
    pub zyzy: f64,
    pub zxzy: f64,
    pub zzx: f64,
    pub zzy: f64,
}

impl LagrangianModel {
    pub fn new(kind: ModelKind, potential: PolynomialPotential) -> Self {
        Self { kind, potential }
    }

    pub fn hyperbolic(potential: PolynomialPotential) -> Self {
        Self::new(ModelKind::ScalarHyperbolic, potential)
    }

    pub fn elliptic(potential: PolynomialPotential) -> Self {
        Self::new(ModelKind::ScalarElliptic, potential)
    }

    /// `+1` for the elliptic family, `-1` for the hyperbolic one: the sign of
    /// `z_y^2` in the kinetic form.
    #[inline]
    pub fn y_signature(&self) -> f64 {
        match self.kind {
            ModelKind::ScalarHyperbolic => -1.0,
            ModelKind::ScalarElliptic => 1.0,
        }
    }

    pub fn eval_lagrangian(&self, _x: f64, _y: f64, z: f64, zx: f64, zy: f64) -> f64 {
        0.5 * (zx * zx + self.y_signature() * zy * zy) + self.potential.eval(z)
    }

    pub fn eval_partials(&self, _x: f64, _y: f64, z: f64, zx: f64, zy: f64) -> Partials {
        let (_, dp, _) = self.potential.eval_with_derivatives(z);
        Partials {
            f_zx: zx,
            f_zy: self.y_signature() * zy,
            f_z: dp,
        }
    }

    pub fn eval_second_partials(&self, _x: f64, _y: f64, z: f64, _zx: f64, _zy: f64) -> SecondPartials {
        let (_, _, ddp) = self.potential.eval_with_derivatives(z);
        SecondPartials {
            zz: ddp,
            zxzx: 1.0,
            zyzy: self.y_signature(),
            zxzy: 0.0,
            zzx: 0.0,
            zzy: 0.0,
        }
    }
}

/// Nodal field on a logically rectangular grid. Index `(i, j)` maps to
/// `i * ny + j`; `i` runs along the first grid direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub nx: usize,
    pub ny: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl FieldGrid {
    pub fn new(nx: usize, ny: usize, x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        let len = nx * ny;
        if x.len() != len || y.len() != len || z.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "field grid {nx}x{ny} needs {len} samples per array"
            )));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!("grid {nx}x{ny} has no cells")));
        }
        Ok(Self { nx, ny, x, y, z })
    }

    /// Uniform rectangular grid over `[x0, x1] x [y0, y1]` carrying `f(x, y)`.
    pub fn rectangle(
        (x0, x1): (f64, f64),
        (y0, y1): (f64, f64),
        nx: usize,
        ny: usize,
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let mut x = Vec::with_capacity(nx * ny);
        let mut y = Vec::with_capacity(nx * ny);
        let mut z = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            let xi = x0 + (x1 - x0) * i as f64 / (nx - 1) as f64;
            for j in 0..ny {
                let yj = y0 + (y1 - y0) * j as f64 / (ny - 1) as f64;
                x.push(xi);
                y.push(yj);
                z.push(f(xi, yj));
            }
        }
        Self { nx, ny, x, y, z }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    /// Checks that every triangle of both cell diagonals has the same
    /// orientation and area at least `eps_jac`.
    pub fn check_nondegenerate(&self, eps_jac: f64) -> Result<()> {
        let mut sign = 0.0;
        for i in 0..self.nx - 1 {
            for j in 0..self.ny - 1 {
                for tri in cell_triangles(self, i, j) {
                    let a = signed_area(self, tri);
                    if a.abs() < eps_jac || (sign != 0.0 && a * sign < 0.0) {
                        return Err(Error::DegenerateGrid { i, j, jacobian: a });
                    }
                    sign = a.signum();
                }
            }
        }
        Ok(())
    }
}

type Triangle = [usize; 3];

/// The four triangles obtained from the two diagonal splits of cell `(i, j)`.
/// Both splits are kept and weighted by one half, so the discrete action is
/// symmetric under reflections of the logical grid.
pub(crate) fn cell_triangles(g: &FieldGrid, i: usize, j: usize) -> [Triangle; 4] {
    let a = g.idx(i, j);
    let b = g.idx(i + 1, j);
    let c = g.idx(i + 1, j + 1);
    let d = g.idx(i, j + 1);
    [[a, b, c], [a, c, d], [a, b, d], [b, c, d]]
}

fn signed_area(g: &FieldGrid, [a, b, c]: Triangle) -> f64 {
    0.5 * ((g.x[b] - g.x[a]) * (g.y[c] - g.y[a]) - (g.x[c] - g.x[a]) * (g.y[b] - g.y[a]))
}

/// Piecewise-linear data of one triangle: unsigned area and the constant
/// gradients of the three nodal hat functions.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TriangleGeometry {
    pub nodes: Triangle,
    pub area: f64,
    pub grad: [[f64; 2]; 3],
    pub centroid: [f64; 2],
}

impl TriangleGeometry {
    pub fn new(g: &FieldGrid, nodes: Triangle) -> Self {
        let [a, b, c] = nodes;
        let two_area = 2.0 * signed_area(g, nodes);
        let (xa, ya) = (g.x[a], g.y[a]);
        let (xb, yb) = (g.x[b], g.y[b]);
        let (xc, yc) = (g.x[c], g.y[c]);
        let grad = [
            [(yb - yc) / two_area, (xc - xb) / two_area],
            [(yc - ya) / two_area, (xa - xc) / two_area],
            [(ya - yb) / two_area, (xb - xa) / two_area],
        ];
        Self {
            nodes,
            area: 0.5 * two_area.abs(),
            grad,
            centroid: [(xa + xb + xc) / 3.0, (ya + yb + yc) / 3.0],
        }
    }

    /// `(z_centroid, z_x, z_y)` of the linear interpolant.
    pub fn jet(&self, z: &[f64]) -> (f64, f64, f64) {
        let mut zc = 0.0;
        let mut zx = 0.0;
        let mut zy = 0.0;
        for (k, &n) in self.nodes.iter().enumerate() {
            zc += z[n];
            zx += z[n] * self.grad[k][0];
            zy += z[n] * self.grad[k][1];
        }
        (zc / 3.0, zx, zy)
    }
}

/// All triangles of the grid with their geometry; each cell contributes both
/// diagonal splits, weighted one half.
pub(crate) fn triangulate(g: &FieldGrid) -> Vec<TriangleGeometry> {
    let mut out = Vec::with_capacity(4 * (g.nx - 1) * (g.ny - 1));
    for i in 0..g.nx - 1 {
        for j in 0..g.ny - 1 {
            for tri in cell_triangles(g, i, j) {
                out.push(TriangleGeometry::new(g, tri));
            }
        }
    }
    out
}

/// Discrete action `sum_T (|T| / 2) F(centroid, grad z)` over both
/// triangulations of the grid.
pub fn discrete_action(model: &LagrangianModel, g: &FieldGrid) -> f64 {
    triangulate(g)
        .iter()
        .map(|t| {
            let (zc, zx, zy) = t.jet(&g.z);
            0.5 * t.area * model.eval_lagrangian(t.centroid[0], t.centroid[1], zc, zx, zy)
        })
        .sum()
}

/// Gradient of [`discrete_action`] with respect to every nodal value, and
/// the lumped (dual-cell) area of every node.
pub(crate) fn action_gradient(
    model: &LagrangianModel,
    g: &FieldGrid,
    tris: &[TriangleGeometry],
) -> (Vec<f64>, Vec<f64>) {
    let mut grad = vec![0.0; g.z.len()];
    let mut dual = vec![0.0; g.z.len()];
    for t in tris {
        let (zc, zx, zy) = t.jet(&g.z);
        let p = model.eval_partials(t.centroid[0], t.centroid[1], zc, zx, zy);
        let w = 0.5 * t.area;
        for (k, &n) in t.nodes.iter().enumerate() {
            grad[n] += w * (p.f_z / 3.0 + p.f_zx * t.grad[k][0] + p.f_zy * t.grad[k][1]);
            dual[n] += w / 3.0;
        }
    }
    (grad, dual)
}

/// Discrete Euler–Lagrange residual `d/dx F_zx + d/dy F_zy - F_z` at the
/// interior nodes, returned as an `(nx - 2) x (ny - 2)` row-major array.
///
/// The residual is minus the gradient of [`discrete_action`] divided by the
/// lumped nodal area. On uniform rectangular grids this reduces to the
/// five-point central stencil for the kinetic part.
pub fn euler_lagrange_residual(model: &LagrangianModel, field: &FieldGrid) -> Result<Vec<f64>> {
    euler_lagrange_residual_with(model, field, EPS_JAC)
}

pub fn euler_lagrange_residual_with(
    model: &LagrangianModel,
    field: &FieldGrid,
    eps_jac: f64,
) -> Result<Vec<f64>> {
    if field.nx < 3 || field.ny < 3 {
        return Err(Error::InvalidGrid(format!(
            "residual needs at least 3x3 nodes, got {}x{}",
            field.nx, field.ny
        )));
    }
    field.check_nondegenerate(eps_jac)?;
    let tris = triangulate(field);
    let (grad, dual) = action_gradient(model, field, &tris);
    let mut out = Vec::with_capacity((field.nx - 2) * (field.ny - 2));
    for i in 1..field.nx - 1 {
        for j in 1..field.ny - 1 {
            let k = field.idx(i, j);
            out.push(-grad[k] / dual[k]);
        }
    }
    Ok(out)
}
