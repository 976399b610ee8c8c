//! Comparisons between finite-difference momenta of the eikonal and the
//! closed-form momenta of a preset, shared by the runner and the tests.

use serde::Serialize;

use crate::curves::Curve;
use crate::eikonal::{constraint_residual, fd_momenta, hj_residual_generic, MomentaField, SolverOptions, StripRegion};
use crate::error::Result;
use crate::models::LagrangianModel;
use crate::presets::Preset;

/// Per-node comparison on `C1` at one resolution. Endpoint samples are
/// excluded from every maximum.
#[derive(Debug, Clone, Serialize)]
pub struct MomentaComparison {
    pub grid: usize,
    pub curve_samples: usize,
    #[serde(skip)]
    pub curve: Curve,
    pub analytic: MomentaField,
    pub fd: MomentaField,
    /// `|p_fd - p| / |p|` per sample (Euclidean norm over the three
    /// components); zero at the endpoints.
    pub relative_error: Vec<f64>,
    pub constraint_analytic: Vec<f64>,
    pub constraint_fd: Vec<f64>,
    pub hj_analytic: Vec<f64>,
    pub hj_fd: Vec<f64>,
}

fn interior_max(v: &[f64]) -> f64 {
    let n = v.len();
    v[1..n - 1].iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl MomentaComparison {
    pub fn max_relative_error(&self) -> f64 {
        interior_max(&self.relative_error)
    }

    pub fn max_constraint_fd(&self) -> f64 {
        interior_max(&self.constraint_fd)
    }

    pub fn max_constraint_analytic(&self) -> f64 {
        self.constraint_analytic.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_hj_fd(&self) -> f64 {
        interior_max(&self.hj_fd)
    }

    pub fn max_hj_analytic(&self) -> f64 {
        self.hj_analytic.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Rows `tau, analytic_px, analytic_py, analytic_pz, fd_px, fd_py, fd_pz,
    /// hj_residual, constraint_residual` for every sample of `C1`, the
    /// residuals taken from the finite-difference momenta.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,analytic_px,analytic_py,analytic_pz,fd_px,fd_py,fd_pz,hj_residual,constraint_residual\n");
        for i in 0..self.curve.len() {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                self.curve.tau(i),
                self.analytic.px[i],
                self.analytic.py[i],
                self.analytic.pz[i],
                self.fd.px[i],
                self.fd.py[i],
                self.fd.pz[i],
                self.hj_fd[i],
                self.constraint_fd[i],
            ));
        }
        out
    }
}

/// Scalar Hamilton–Jacobi residual `y' r_x + x' r_y` of the generic
/// elimination; for the hyperbolic model it equals the scalar-field form.
pub fn hj_residual(model: &LagrangianModel, curve: &Curve, momenta: &MomentaField) -> Result<Vec<f64>> {
    let t = curve.tangent();
    Ok(hj_residual_generic(model, curve, momenta)?
        .into_iter()
        .enumerate()
        .map(|(i, (rx, ry))| t.y[i] * rx + t.x[i] * ry)
        .collect())
}

/// Solves the preset on a `grid x grid` mesh with `(grid + 1) / 2` curve
/// samples and compares the momenta at every interior sample of `C1` with
/// the closed-form momenta.
pub fn compare_momenta(preset: Preset, grid: usize, opts: &SolverOptions) -> Result<MomentaComparison> {
    let region = preset.region(grid.div_ceil(2))?;
    let reference = preset.analytic_momenta(&region.c1)?;
    compare_with_reference(&preset.model(), &region, grid, reference, opts)
}

/// Same comparison against given reference momenta on `C1`.
pub fn compare_with_reference(
    model: &LagrangianModel,
    region: &StripRegion,
    grid: usize,
    analytic: MomentaField,
    opts: &SolverOptions,
) -> Result<MomentaComparison> {
    let n = region.c1.len();
    let fd = fd_momenta(model, region, (grid, grid), opts)?;
    let curve = region.c1.clone();
    let relative_error = (0..n)
        .map(|i| {
            if i == 0 || i == n - 1 {
                return 0.0;
            }
            let d = (fd.px[i] - analytic.px[i]).powi(2)
                + (fd.py[i] - analytic.py[i]).powi(2)
                + (fd.pz[i] - analytic.pz[i]).powi(2);
            let a = analytic.px[i].powi(2) + analytic.py[i].powi(2) + analytic.pz[i].powi(2);
            (d / a).sqrt()
        })
        .collect();
    let mut constraint_fd = constraint_residual(&curve, &fd)?;
    let mut hj_fd = hj_residual(model, &curve, &fd)?;
    for v in [&mut constraint_fd, &mut hj_fd] {
        v[0] = 0.0;
        v[n - 1] = 0.0;
    }
    Ok(MomentaComparison {
        grid,
        curve_samples: n,
        constraint_analytic: constraint_residual(&curve, &analytic)?,
        hj_analytic: hj_residual(model, &curve, &analytic)?,
        curve,
        analytic,
        fd,
        relative_error,
        constraint_fd,
        hj_fd,
    })
}
