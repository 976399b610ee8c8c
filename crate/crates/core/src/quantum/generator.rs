use num_complex::Complex64;
use rayon::prelude::*;

use crate::curves::SliceGeometry;
use crate::error::Result;
use crate::models::PolynomialPotential;

use super::lattice::{check_spacelike, lattice_transcription, GeneratorCoefficients, LatticeSlice, Transcription};
use super::state::{decode_with_indices, FullGridState, ZGrid, MAX_GRID_SITES};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Grid tables shared by every application of a generator.
#[derive(Debug, Clone)]
pub(crate) struct GridOp {
    m: usize,
    grid: ZGrid,
    strides: Vec<usize>,
    tr: Transcription,
    potential: Vec<f64>,
}

impl GridOp {
    pub fn new(slice: &LatticeSlice, grid: ZGrid) -> Self {
        let m = slice.sites();
        Self {
            m,
            grid,
            strides: (0..m).map(|i| grid.points.pow((m - 1 - i) as u32)).collect(),
            tr: lattice_transcription(slice),
            potential: potential_table(&slice.potential, &grid),
        }
    }

    pub fn len(&self) -> usize {
        self.grid.points.pow(self.m as u32)
    }

    #[inline]
    fn neighbours(&self, psi: &[Complex64], idx: usize, k: usize, i: usize) -> (Complex64, Complex64) {
        let s = self.strides[i];
        let up = if k + 1 < self.grid.points { psi[idx + s] } else { ZERO };
        let down = if k > 0 { psi[idx - s] } else { ZERO };
        (up, down)
    }

    /// `out = identity * psi + scale * A psi` with
    /// `A = sum_i dtau [N_i R1_i + S_i R2_i]`.
    pub fn apply(
        &self,
        coef: &GeneratorCoefficients,
        psi: &[Complex64],
        out: &mut [Complex64],
        identity: Complex64,
        scale: Complex64,
    ) {
        let m = self.m;
        let dz = self.grid.spacing();
        let dt = self.tr.tau_step;
        // -i [ -sum_i kin_i lap_i + pot ] + sum_i tr_i zdot_i (up - down)
        let kin: Vec<f64> = (0..m)
            .map(|i| 0.5 * dt * coef.lapse[i] * self.tr.second_scale / (dz * dz))
            .collect();
        let transport: Vec<f64> = (0..m)
            .map(|i| -dt * coef.shift[i] * self.tr.first_scale / (2.0 * dz))
            .collect();
        out.par_iter_mut().enumerate().for_each(|(idx, o)| {
            let mut z = [0.0; MAX_GRID_SITES];
            let mut ks = [0usize; MAX_GRID_SITES];
            decode_with_indices(idx, m, &self.grid, &mut z, &mut ks);
            let p = psi[idx];
            let mut pot = 0.0;
            let mut lap = ZERO;
            let mut drift = ZERO;
            for i in 0..m {
                let zf = self.tr.forward_z_dot(&z, i);
                pot += dt * coef.lapse[i] * (0.5 * zf * zf + coef.signature[i] * self.potential[ks[i]]);
                let (up, down) = self.neighbours(psi, idx, ks[i], i);
                lap += (up - 2.0 * p + down) * kin[i];
                if transport[i] != 0.0 {
                    drift += (up - down) * (transport[i] * self.tr.centered_z_dot(&z, i));
                }
            }
            let a = -I * (p * pot - lap) + drift;
            *o = identity * p + scale * a;
        });
    }

    /// `R1_i psi` and `R2_i psi` for a single site.
    fn site_terms(&self, slice: &LatticeSlice, psi: &[Complex64], i: usize) -> (Vec<Complex64>, Vec<Complex64>) {
        let m = self.m;
        let dz = self.grid.spacing();
        let sig = slice.x_dot[i] * slice.x_dot[i] - slice.y_dot[i] * slice.y_dot[i];
        (0..psi.len())
            .into_par_iter()
            .map(|idx| {
                let mut z = [0.0; MAX_GRID_SITES];
                let mut ks = [0usize; MAX_GRID_SITES];
                decode_with_indices(idx, m, &self.grid, &mut z, &mut ks);
                let p = psi[idx];
                let (up, down) = self.neighbours(psi, idx, ks[i], i);
                let second = (up - 2.0 * p + down) * (self.tr.second_scale / (dz * dz));
                let first = (up - down) * (self.tr.first_scale / (2.0 * dz));
                let zf = self.tr.forward_z_dot(&z, i);
                let r1 = -I * (0.5 * (-second + p * (zf * zf)) + p * (sig * self.potential[ks[i]]));
                let r2 = -first * self.tr.centered_z_dot(&z, i);
                (r1, r2)
            })
            .unzip()
    }
}

fn potential_table(p: &PolynomialPotential, grid: &ZGrid) -> Vec<f64> {
    (0..grid.points).map(|k| p.eval(grid.coord(k))).collect()
}

/// Solves the two functional equations at site `i` for `dPsi/dx(tau_i)` and
/// `dPsi/dy(tau_i)`:
///
/// ```text
/// y' Px + x' Py = -i [ (-d2Psi/dz^2 + z'^2 Psi)/2 + (x'^2 - y'^2) p(z) Psi ]
/// x' Px + y' Py = -z' dPsi/dz
/// ```
pub fn solve_functional_derivatives(state: &FullGridState, i: usize) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let s = &state.slice;
    check_spacelike(&s.x_dot[i..=i], &s.y_dot[i..=i], 0).map_err(|e| match e {
        crate::Error::LightlikePoint { step, gap, .. } => crate::Error::LightlikePoint { step, site: i, gap },
        other => other,
    })?;
    let op = GridOp::new(s, state.grid);
    let (r1, r2) = op.site_terms(s, &state.psi, i);
    let (xd, yd) = (s.x_dot[i], s.y_dot[i]);
    let det = yd * yd - xd * xd;
    let px = r1.iter().zip(&r2).map(|(a, b)| (a * yd - b * xd) / det).collect();
    let py = r1.iter().zip(&r2).map(|(a, b)| (b * yd - a * xd) / det).collect();
    Ok((px, py))
}

/// Residual tensors of both functional equations at site `i` for candidate
/// derivatives `(px, py)`, as max-norms.
pub fn functional_equation_residuals(
    state: &FullGridState,
    i: usize,
    px: &[Complex64],
    py: &[Complex64],
) -> (f64, f64) {
    let s = &state.slice;
    let op = GridOp::new(s, state.grid);
    let (r1, r2) = op.site_terms(s, &state.psi, i);
    let (xd, yd) = (s.x_dot[i], s.y_dot[i]);
    let mut e1: f64 = 0.0;
    let mut e2: f64 = 0.0;
    for k in 0..r1.len() {
        e1 = e1.max((px[k] * yd + py[k] * xd - r1[k]).norm());
        e2 = e2.max((px[k] * xd + py[k] * yd - r2[k]).norm());
    }
    (e1, e2)
}

/// Matrix of the generator `A` at a slice geometry, column by column. Only
/// meant for small grids.
pub fn generator_matrix(slice: &LatticeSlice, grid: ZGrid, geometry: &SliceGeometry) -> Result<Vec<Vec<Complex64>>> {
    let coef = GeneratorCoefficients::new(geometry, 0)?;
    let op = GridOp::new(slice, grid);
    let n = op.len();
    let mut cols = Vec::with_capacity(n);
    let mut e = vec![ZERO; n];
    let mut out = vec![ZERO; n];
    for c in 0..n {
        e[c] = Complex64::new(1.0, 0.0);
        op.apply(&coef, &e, &mut out, ZERO, Complex64::new(1.0, 0.0));
        cols.push(out.clone());
        e[c] = ZERO;
    }
    Ok(cols)
}
