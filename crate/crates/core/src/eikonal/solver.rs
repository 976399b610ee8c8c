use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{Curve, Deformation};
use crate::error::{Error, Result};
use crate::linalg::BandedMatrix;
use crate::models::{action_gradient, discrete_action, triangulate, FieldGrid, LagrangianModel, ModelKind, TriangleGeometry, EPS_JAC};
use crate::numerics::{integrate, quadrature_weights};

use super::momenta::{momenta_from_slopes, MomentaField};
use super::region::StripRegion;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Max-norm of the interior Euler–Lagrange residual at convergence.
    pub newton_tol: f64,
    pub max_iter: usize,
    pub eps_jac: f64,
    /// Largest `x`-extent / `y`-extent accepted for the hyperbolic model.
    pub hyperbolic_aspect: f64,
    /// Absolute step of the finite-difference variational derivatives.
    pub fd_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_iter: 50,
            eps_jac: EPS_JAC,
            hyperbolic_aspect: 0.75,
            fd_step: 1e-4,
        }
    }
}

/// Stationary field of the discrete action on a strip region.
#[derive(Debug, Clone)]
pub struct ExtremalField {
    pub region: StripRegion,
    /// Nodes `(i, j)` at `s = i / (ns - 1)` and `tau = j / (nt - 1)` times
    /// the curve period.
    pub field: FieldGrid,
    /// `(z_x, z_y)` at every sample of `C1`.
    pub boundary_slopes: Vec<(f64, f64)>,
    pub residual_norm: f64,
    pub iterations: usize,
}

impl ExtremalField {
    /// Momenta on `C1` from the boundary slopes.
    pub fn momenta(&self, model: &LagrangianModel) -> Result<MomentaField> {
        let (zx, zy): (Vec<f64>, Vec<f64>) = self.boundary_slopes.iter().copied().unzip();
        momenta_from_slopes(model, &self.region.c1, &zx, &zy)
    }
}

fn check_aspect(model: &LagrangianModel, region: &StripRegion, opts: &SolverOptions) -> Result<()> {
    if model.kind == ModelKind::ScalarHyperbolic {
        let width = region.max_width();
        let height = region.height();
        if width > opts.hyperbolic_aspect * height {
            return Err(Error::DegenerateRegion(format!(
                "hyperbolic strip of width {width} exceeds {} x height {height}",
                opts.hyperbolic_aspect
            )));
        }
    }
    Ok(())
}

/// Interior residual max-norm `max |grad_k| / dual_k`.
fn residual_norm(grad: &[f64], dual: &[f64], g: &FieldGrid) -> f64 {
    let mut r = 0.0_f64;
    for i in 1..g.nx - 1 {
        for j in 1..g.ny - 1 {
            let k = g.idx(i, j);
            r = r.max((grad[k] / dual[k]).abs());
        }
    }
    r
}

/// Hessian of the discrete action restricted to the interior nodes,
/// ordered `(i - 1) * (ny - 2) + (j - 1)`.
fn interior_hessian(model: &LagrangianModel, g: &FieldGrid, tris: &[TriangleGeometry]) -> BandedMatrix {
    let m = g.ny - 2;
    let n = (g.nx - 2) * m;
    let band = m + 1;
    let mut h = BandedMatrix::zeros(n, band, band);
    let unknown = |node: usize| {
        let (i, j) = (node / g.ny, node % g.ny);
        (i > 0 && i < g.nx - 1 && j > 0 && j < g.ny - 1).then(|| (i - 1) * m + (j - 1))
    };
    for t in tris {
        let (zc, zx, zy) = t.jet(&g.z);
        let s = model.eval_second_partials(t.centroid[0], t.centroid[1], zc, zx, zy);
        let h3 = [[s.zz, s.zzx, s.zzy], [s.zzx, s.zxzx, s.zxzy], [s.zzy, s.zxzy, s.zyzy]];
        let v: [[f64; 3]; 3] = std::array::from_fn(|k| [1.0 / 3.0, t.grad[k][0], t.grad[k][1]]);
        let w = 0.5 * t.area;
        for a in 0..3 {
            let Some(ra) = unknown(t.nodes[a]) else { continue };
            for b in 0..3 {
                let Some(rb) = unknown(t.nodes[b]) else { continue };
                let mut q = 0.0;
                for p in 0..3 {
                    for r in 0..3 {
                        q += v[a][p] * h3[p][r] * v[b][r];
                    }
                }
                h.add(ra, rb, w * q);
            }
        }
    }
    h
}

/// Solves for the stationary point of the discrete action with Dirichlet
/// data from the region, starting from the transfinite interpolation.
pub fn solve_extremal(
    model: &LagrangianModel,
    region: &StripRegion,
    (ns, nt): (usize, usize),
    opts: &SolverOptions,
) -> Result<ExtremalField> {
    if ns < 17 || nt < 17 {
        return Err(Error::InvalidGrid(format!("grid {ns}x{nt} is below 17x17")));
    }
    check_aspect(model, region, opts)?;
    let mut g = region.grid(ns, nt)?;
    g.check_nondegenerate(opts.eps_jac)
        .map_err(|e| Error::DegenerateRegion(e.to_string()))?;
    let tris = triangulate(&g);
    let m = nt - 2;
    let mut iterations = 0;
    let (grad, dual) = action_gradient(model, &g, &tris);
    let mut res = residual_norm(&grad, &dual, &g);
    let mut best = res;
    let mut grad = grad;
    while res > opts.newton_tol {
        if iterations == opts.max_iter || !res.is_finite() || res > 1e6 * best.max(1.0) {
            return Err(Error::NewtonDiverged {
                iterations,
                residual: res,
            });
        }
        let h = interior_hessian(model, &g, &tris);
        let mut rhs: Vec<f64> = (1..ns - 1)
            .flat_map(|i| (1..nt - 1).map(move |j| (i, j)))
            .map(|(i, j)| -grad[g.idx(i, j)])
            .collect();
        h.solve_in_place(&mut rhs)?;
        for i in 1..ns - 1 {
            for j in 1..nt - 1 {
                let k = g.idx(i, j);
                g.z[k] += rhs[(i - 1) * m + (j - 1)];
            }
        }
        iterations += 1;
        let (gr, du) = action_gradient(model, &g, &tris);
        let next = residual_norm(&gr, &du, &g);
        grad = gr;
        // a Newton step that no longer reduces the residual has reached
        // the rounding floor of the gradient evaluation
        if next >= res && next <= 1e3 * opts.newton_tol {
            res = next;
            break;
        }
        res = next;
        best = best.min(res);
    }
    if res > opts.newton_tol && res > 1e3 * opts.newton_tol {
        return Err(Error::NewtonDiverged {
            iterations,
            residual: res,
        });
    }
    let boundary_slopes = boundary_slopes(region, &g)?;
    Ok(ExtremalField {
        region: region.clone(),
        field: g,
        boundary_slopes,
        residual_norm: res,
        iterations,
    })
}

/// Slopes at the `C1` samples: one-sided second-order differences across
/// the strip, curve tangent along it, mapped through the planar Jacobian.
fn boundary_slopes(region: &StripRegion, g: &FieldGrid) -> Result<Vec<(f64, f64)>> {
    let c1 = &region.c1;
    let r = region.refinement(g.ny)?;
    let ds = 1.0 / (g.nx - 1) as f64;
    let t = c1.tangent();
    let last = g.nx - 1;
    let one_sided = |v: &[f64], j: usize| {
        (3.0 * v[g.idx(last, j)] - 4.0 * v[g.idx(last - 1, j)] + v[g.idx(last - 2, j)]) / (2.0 * ds)
    };
    (0..c1.len())
        .map(|i| {
            let j = i * r;
            let (xs, ys, zs) = (one_sided(&g.x, j), one_sided(&g.y, j), one_sided(&g.z, j));
            let (xt, yt, zt) = (t.x[i], t.y[i], t.z[i]);
            let det = xs * yt - ys * xt;
            if !(det.abs() >= EPS_JAC) {
                return Err(Error::DegenerateJacobian {
                    i: last,
                    j,
                    jacobian: det,
                });
            }
            Ok(((zs * yt - ys * zt) / det, (xs * zt - zs * xt) / det))
        })
        .collect()
}

/// Discrete action of the extremal field.
pub fn eikonal_value(
    model: &LagrangianModel,
    region: &StripRegion,
    grid: (usize, usize),
    opts: &SolverOptions,
) -> Result<f64> {
    let ex = solve_extremal(model, region, grid, opts)?;
    Ok(discrete_action(model, &ex.field))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    X,
    Y,
    Z,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::X, Component::Y, Component::Z];
}

fn perturbed(region: &StripRegion, component: Component, index: usize, delta: f64) -> Result<StripRegion> {
    let mut c1: Curve = region.c1.clone();
    let v = match component {
        Component::X => &mut c1.x,
        Component::Y => &mut c1.y,
        Component::Z => &mut c1.z,
    };
    v[index] += delta;
    region.with_c1(c1)
}

/// Variational-derivative density of the eikonal with respect to one
/// component of `C1` at an interior sample: central difference of
/// [`eikonal_value`] divided by `w_i * dtau`.
pub fn eikonal_gradient_fd(
    model: &LagrangianModel,
    region: &StripRegion,
    grid: (usize, usize),
    component: Component,
    index: usize,
    opts: &SolverOptions,
) -> Result<f64> {
    fd_with_step(model, region, grid, component, index, opts, opts.fd_step)
}

fn fd_with_step(
    model: &LagrangianModel,
    region: &StripRegion,
    grid: (usize, usize),
    component: Component,
    index: usize,
    opts: &SolverOptions,
    h: f64,
) -> Result<f64> {
    let c1 = &region.c1;
    let n = c1.len();
    if index == 0 || index >= n - 1 {
        return Err(Error::NotInterior { index, n });
    }
    let value = match component {
        Component::X => c1.x[index],
        Component::Y => c1.y[index],
        Component::Z => c1.z[index],
    };
    let spread = (value + h) - (value - h);
    if !(spread > 10.0 * f64::EPSILON * value.abs().max(f64::MIN_POSITIVE)) {
        return Err(Error::StepTooSmall { step: h, value });
    }
    let (plus, minus) = rayon::join(
        || eikonal_value(model, &perturbed(region, component, index, h)?, grid, opts),
        || eikonal_value(model, &perturbed(region, component, index, -h)?, grid, opts),
    );
    let w = quadrature_weights(n, c1.mode)[index];
    Ok((plus? - minus?) / spread / (w * c1.step))
}

/// Finite-difference density with a Richardson estimate of its error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdEstimate {
    /// Extrapolation from steps `h` and `h / 2`.
    pub value: f64,
    /// `|D(h) - D(h / 2)|`.
    pub richardson_delta: f64,
}

pub fn eikonal_gradient_fd_checked(
    model: &LagrangianModel,
    region: &StripRegion,
    grid: (usize, usize),
    component: Component,
    index: usize,
    opts: &SolverOptions,
) -> Result<FdEstimate> {
    let h = opts.fd_step;
    let coarse = fd_with_step(model, region, grid, component, index, opts, h)?;
    let fine = fd_with_step(model, region, grid, component, index, opts, 0.5 * h)?;
    Ok(FdEstimate {
        value: fine + (fine - coarse) / 3.0,
        richardson_delta: (fine - coarse).abs(),
    })
}

/// Finite-difference momenta at every interior sample of `C1`; the endpoint
/// entries are zero.
pub fn fd_momenta(
    model: &LagrangianModel,
    region: &StripRegion,
    grid: (usize, usize),
    opts: &SolverOptions,
) -> Result<MomentaField> {
    let n = region.c1.len();
    let jobs: Vec<(usize, Component)> = (1..n - 1)
        .flat_map(|i| Component::ALL.into_iter().map(move |c| (i, c)))
        .collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(i, c)| eikonal_gradient_fd(model, region, grid, c, i, opts))
        .collect::<Result<_>>()?;
    let mut m = MomentaField::zeros(n);
    for (&(i, c), v) in jobs.iter().zip(values) {
        match c {
            Component::X => m.px[i] = v,
            Component::Y => m.py[i] = v,
            Component::Z => m.pz[i] = v,
        }
    }
    Ok(m)
}

/// First variation `int (px dx + py dy + pz dz) dtau` of the eikonal under a
/// deformation of `C1`, with momenta from the boundary slopes.
pub fn boundary_variation(model: &LagrangianModel, extremal: &ExtremalField, defo: &Deformation) -> Result<f64> {
    let c1 = &extremal.region.c1;
    defo.conforms_to(c1)?;
    if !defo.vanishes_at_endpoints() {
        return Err(Error::InvalidCurve("deformation must vanish at the endpoints of C1".into()));
    }
    let m = extremal.momenta(model)?;
    let density: Vec<f64> = (0..c1.len())
        .map(|i| m.px[i] * defo.dx[i] + m.py[i] * defo.dy[i] + m.pz[i] * defo.dz[i])
        .collect();
    Ok(integrate(&density, c1.step, c1.mode))
}
