use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::Foliation;
use crate::error::{Error, Result};
use crate::linalg::bicgstab;
use crate::numerics::BoundaryMode;

use super::gaussian::{evolve_for_time, quadratic_parts};
use super::generator::GridOp;
use super::lattice::{lattice_transcription, GeneratorCoefficients, LatticeSlice};
use super::state::{ordered_sum, FullGridState, WaveFunctional, MAX_GRID_SITES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    CrankNicolson,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveOptions {
    pub scheme: Scheme,
    /// Step-doubling bound on the relative local error; `None` skips the
    /// estimate.
    pub tol_step: Option<f64>,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::CrankNicolson,
            tol_step: Some(1e-8),
            solver_tol: 1e-13,
            solver_max_iter: 500,
        }
    }
}

/// Per-step diagnostics of an evolution.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvolutionReport {
    pub steps: usize,
    pub alpha_step: f64,
    /// `|Psi_k|^2 / |Psi_0|^2 - 1` after every step.
    pub norm_drift: Vec<f64>,
    /// `E_k - E_0` of the straight-slice lattice Hamiltonian.
    pub energy_drift: Vec<f64>,
    /// Largest condition number of the per-site 2x2 systems used in the step.
    pub condition: Vec<f64>,
    /// Step-doubling local error estimates (empty when disabled).
    pub local_error: Vec<f64>,
    pub solver_iterations: Vec<usize>,
}

impl EvolutionReport {
    pub fn max_norm_drift(&self) -> f64 {
        self.norm_drift.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_energy_drift(&self) -> f64 {
        self.energy_drift.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn check_foliation(foliation: &Foliation, slice: &LatticeSlice) -> Result<()> {
    if foliation.mode != BoundaryMode::Periodic {
        return Err(Error::InvalidCurve("evolution needs a periodic foliation".into()));
    }
    if foliation.n_tau != slice.sites() {
        return Err(Error::ShapeMismatch(format!(
            "foliation has {} sites, state has {}",
            foliation.n_tau,
            slice.sites()
        )));
    }
    if (foliation.tau_step - slice.tau_step).abs() > 1e-12 * slice.tau_step {
        return Err(Error::ShapeMismatch(format!(
            "foliation step {} differs from lattice step {}",
            foliation.tau_step, slice.tau_step
        )));
    }
    Ok(())
}

struct Stepper<'a> {
    foliation: &'a Foliation,
    op: GridOp,
    opts: EvolveOptions,
}

impl Stepper<'_> {
    fn coefficients(&self, alpha: f64, step: usize) -> Result<GeneratorCoefficients> {
        GeneratorCoefficients::new(&self.foliation.slice_geometry(alpha), step)
    }

    fn crank_nicolson(
        &self,
        psi: &[Complex64],
        alpha: f64,
        h: f64,
        step: usize,
    ) -> Result<(Vec<Complex64>, f64, usize)> {
        let coef = self.coefficients(alpha + 0.5 * h, step)?;
        let one = Complex64::new(1.0, 0.0);
        let half = Complex64::new(0.5 * h, 0.0);
        let mut rhs = vec![Complex64::new(0.0, 0.0); psi.len()];
        self.op.apply(&coef, psi, &mut rhs, one, half);
        // explicit Euler guess
        let mut x: Vec<Complex64> = rhs.par_iter().zip(psi).map(|(r, p)| 2.0 * r - p).collect();
        let stats = bicgstab(
            |v, out| self.op.apply(&coef, v, out, one, -half),
            &rhs,
            &mut x,
            self.opts.solver_tol,
            self.opts.solver_max_iter,
        )?;
        Ok((x, coef.condition, stats.iterations))
    }

    fn rk4(&self, psi: &[Complex64], alpha: f64, h: f64, step: usize) -> Result<(Vec<Complex64>, f64, usize)> {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let n = psi.len();
        let c1 = self.coefficients(alpha, step)?;
        let c2 = self.coefficients(alpha + 0.5 * h, step)?;
        let c4 = self.coefficients(alpha + h, step)?;
        let mut k = vec![zero; n];
        let mut acc = psi.to_vec();
        let mut stage = vec![zero; n];
        let plan = [(&c1, 0.5, 1.0), (&c2, 0.5, 2.0), (&c2, 1.0, 2.0), (&c4, 0.0, 1.0)];
        let mut input = psi.to_vec();
        for (coef, next, weight) in plan {
            self.op.apply(coef, &input, &mut k, zero, one);
            acc.par_iter_mut()
                .zip(&k)
                .for_each(|(a, kv)| *a += kv * (h * weight / 6.0));
            if next > 0.0 {
                stage.par_iter_mut()
                    .zip(psi.par_iter().zip(&k))
                    .for_each(|(s, (p, kv))| *s = p + kv * (h * next));
                std::mem::swap(&mut input, &mut stage);
            }
        }
        let cond = c1.condition.max(c2.condition).max(c4.condition);
        Ok((acc, cond, 0))
    }

    fn step(&self, psi: &[Complex64], alpha: f64, h: f64, step: usize) -> Result<(Vec<Complex64>, f64, usize)> {
        match self.opts.scheme {
            Scheme::CrankNicolson => self.crank_nicolson(psi, alpha, h, step),
            Scheme::Rk4 => self.rk4(psi, alpha, h, step),
        }
    }
}

fn relative_difference(a: &[Complex64], b: &[Complex64]) -> f64 {
    let d: f64 = ordered_sum(a.len(), |k| (a[k] - b[k]).norm_sqr());
    let n: f64 = ordered_sum(b.len(), |k| b[k].norm_sqr());
    (d / n).sqrt()
}

/// Integrates `dPsi/dalpha = sum_i dtau [dPsi/dx_i x_alpha + dPsi/dy_i y_alpha]`
/// from the slice at `alpha = 0` to the one at `alpha_extent` in `steps`
/// equal steps. Gaussian states are evolved exactly and need a flat
/// foliation and a quadratic potential.
pub fn evolve(
    state: &WaveFunctional,
    foliation: &Foliation,
    steps: usize,
    opts: &EvolveOptions,
) -> Result<(WaveFunctional, EvolutionReport)> {
    check_foliation(foliation, state.slice())?;
    if foliation.alpha_extent == 0.0 || steps == 0 {
        return Ok((
            state.clone(),
            EvolutionReport {
                steps: 0,
                alpha_step: 0.0,
                ..EvolutionReport::default()
            },
        ));
    }
    let h = foliation.alpha_extent / steps as f64;
    match state {
        WaveFunctional::FullGrid(s) => {
            let (out, report) = evolve_full_grid(s, foliation, steps, h, opts)?;
            Ok((WaveFunctional::FullGrid(out), report))
        }
        WaveFunctional::Gaussian(s) => {
            quadratic_parts(&s.slice.potential)?;
            if !foliation.is_flat() {
                return Err(Error::RepresentationMismatch(
                    "Gaussian states evolve only along flat foliations".into(),
                ));
            }
            let n0 = s.norm();
            let e0 = s.energy();
            let mut report = EvolutionReport {
                steps,
                alpha_step: h,
                ..EvolutionReport::default()
            };
            let mut cur = s.clone();
            for k in 0..steps {
                let a0 = foliation.slice_geometry(k as f64 * h);
                let a1 = foliation.slice_geometry((k + 1) as f64 * h);
                cur = evolve_for_time(&cur, a1.x[0] - a0.x[0])?;
                report.norm_drift.push(cur.norm() / n0 - 1.0);
                report.energy_drift.push(cur.energy() - e0);
                report.condition.push(1.0);
                report.solver_iterations.push(0);
            }
            cur.slice = LatticeSlice::from_foliation(foliation, foliation.alpha_extent, s.slice.potential.clone())?;
            Ok((WaveFunctional::Gaussian(cur), report))
        }
    }
}

fn evolve_full_grid(
    state: &FullGridState,
    foliation: &Foliation,
    steps: usize,
    h: f64,
    opts: &EvolveOptions,
) -> Result<(FullGridState, EvolutionReport)> {
    let stepper = Stepper {
        foliation,
        op: GridOp::new(&state.slice, state.grid),
        opts: *opts,
    };
    let mut report = EvolutionReport {
        steps,
        alpha_step: h,
        ..EvolutionReport::default()
    };
    let n0 = state.norm();
    let e0 = state.energy();
    let mut cur = state.clone();
    for k in 0..steps {
        let alpha = k as f64 * h;
        let (next, cond, iters) = stepper.step(&cur.psi, alpha, h, k)?;
        if let Some(tol) = opts.tol_step {
            let (mid, _, _) = stepper.step(&cur.psi, alpha, 0.5 * h, k)?;
            let (fine, _, _) = stepper.step(&mid, alpha + 0.5 * h, 0.5 * h, k)?;
            let estimate = relative_difference(&next, &fine);
            report.local_error.push(estimate);
            if estimate > tol {
                return Err(Error::StepRejected {
                    step: k,
                    estimate,
                    tolerance: tol,
                });
            }
        }
        cur.psi = next;
        report.norm_drift.push(cur.norm() / n0 - 1.0);
        report.energy_drift.push(cur.energy() - e0);
        report.condition.push(cond);
        report.solver_iterations.push(iters);
    }
    cur.slice = LatticeSlice::from_foliation(foliation, foliation.alpha_extent, state.slice.potential.clone())?;
    Ok((cur, report))
}

/// Evolves one step under the tangential deformation
/// `(dx, dy, dz) = amplitude (x', y', z')` and compares the result, read
/// at the transported argument `z + amplitude z'`, with the initial state:
/// `|Psi_after(z + a z') - Psi(z)| / (a |Psi|)`.
pub fn reparameterization_invariance_check(
    state: &FullGridState,
    amplitude: f64,
    opts: &EvolveOptions,
) -> Result<f64> {
    if amplitude == 0.0 {
        return Ok(0.0);
    }
    let s = &state.slice;
    let m = s.sites();
    let mut x = s.x.clone();
    let mut y = s.y.clone();
    for i in 0..m {
        x.push(s.x[i] + amplitude * s.x_dot[i]);
        y.push(s.y[i] + amplitude * s.y_dot[i]);
    }
    let foliation = Foliation {
        n_tau: m,
        n_alpha: 2,
        mode: BoundaryMode::Periodic,
        tau_step: s.tau_step,
        alpha_extent: 1.0,
        y_winding: s.y_winding,
        x,
        y,
    };
    let opts = EvolveOptions { tol_step: None, ..*opts };
    let (after, _) = evolve_full_grid(state, &foliation, 1, 1.0, &opts)?;
    let tr = lattice_transcription(s);
    let grid = state.grid;
    let g = grid.points;
    let dz = grid.spacing();
    let strides: Vec<usize> = (0..m).map(|i| state.stride(i)).collect();
    let moved: Vec<Complex64> = (0..state.len())
        .into_par_iter()
        .map(|idx| {
            let mut z = [0.0; MAX_GRID_SITES];
            super::state::decode(idx, m, &grid, &mut z);
            let mut target = [0.0; MAX_GRID_SITES];
            for i in 0..m {
                target[i] = z[i] + amplitude * tr.centered_z_dot(&z, i);
            }
            cubic_sample(&after.psi, &target[..m], &strides, g, grid.half_width, dz)
        })
        .collect();
    let num: f64 = ordered_sum(moved.len(), |k| (moved[k] - state.psi[k]).norm_sqr());
    let den: f64 = ordered_sum(moved.len(), |k| state.psi[k].norm_sqr());
    Ok((num / den).sqrt() / amplitude.abs())
}

/// Tensor-product cubic Lagrange interpolation; zero outside the grid.
fn cubic_sample(psi: &[Complex64], z: &[f64], strides: &[usize], g: usize, half_width: f64, dz: f64) -> Complex64 {
    let m = z.len();
    let mut base = [0usize; MAX_GRID_SITES];
    let mut w = [[0.0; 4]; MAX_GRID_SITES];
    for i in 0..m {
        let u = (z[i] + half_width) / dz;
        let b = (u.floor() as isize - 1).clamp(0, g as isize - 4);
        let t = u - b as f64;
        base[i] = b as usize;
        w[i] = [
            -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
            t * (t - 2.0) * (t - 3.0) / 2.0,
            -t * (t - 1.0) * (t - 3.0) / 2.0,
            t * (t - 1.0) * (t - 2.0) / 6.0,
        ];
        if u < 0.0 || u > (g - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for corner in 0..4usize.pow(m as u32) {
        let mut idx = 0;
        let mut weight = 1.0;
        let mut rest = corner;
        for i in 0..m {
            let o = rest % 4;
            rest /= 4;
            idx += (base[i] + o) * strides[i];
            weight *= w[i][o];
        }
        acc += psi[idx] * weight;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::PolynomialPotential;
    use crate::quantum::gaussian::gaussian_free_evolution;
    use crate::quantum::state::{GaussianState, ZGrid};

    fn flat_foliation(m: usize, n_alpha: usize, extent: f64) -> Foliation {
        Foliation::from_fn(m, n_alpha, BoundaryMode::Periodic, 1.0, extent, m as f64, |t, a| (a, t)).unwrap()
    }

    #[test]
    fn zero_duration_is_identity() {
        let slice = LatticeSlice::flat(1, 1.0, 0.0, PolynomialPotential::mass(1.0)).unwrap();
        let g = GaussianState::ground_state(slice).unwrap();
        let st = WaveFunctional::FullGrid(g.to_full_grid(ZGrid::new(32, 6.0).unwrap()).unwrap());
        let fol = flat_foliation(1, 3, 0.0);
        let (out, rep) = evolve(&st, &fol, 10, &EvolveOptions::default()).unwrap();
        assert_eq!(out, st);
        assert_eq!(rep.steps, 0);
    }

    #[test]
    fn oscillator_ground_state_phase() {
        let slice = LatticeSlice::flat(1, 1.0, 0.0, PolynomialPotential::mass(1.0)).unwrap();
        let g = GaussianState::ground_state(slice).unwrap();
        let grid = ZGrid::new(256, 8.0).unwrap();
        let st = g.to_full_grid(grid).unwrap();
        let fol = flat_foliation(1, 5, 1.0);
        let (out, rep) = evolve(&WaveFunctional::FullGrid(st.clone()), &fol, 200, &EvolveOptions::default()).unwrap();
        let WaveFunctional::FullGrid(out) = out else { unreachable!() };
        let overlap = st.inner(&out).unwrap();
        let phase = overlap.arg();
        assert!((phase + 0.5).abs() < 1e-3, "{phase}");
        assert!(rep.max_norm_drift() < 1e-9);
        assert_eq!(rep.norm_drift.len(), 200);
    }

    #[test]
    fn rk4_agrees_with_crank_nicolson() {
        let slice = LatticeSlice::flat(1, 1.0, 0.0, PolynomialPotential::mass(1.0)).unwrap();
        let g = GaussianState::ground_state(slice).unwrap().displaced(vec![1.0], vec![0.0]).unwrap();
        let grid = ZGrid::new(64, 6.0).unwrap();
        let st = WaveFunctional::FullGrid(g.to_full_grid(grid).unwrap());
        let fol = flat_foliation(1, 5, 0.5);
        let cn = evolve(&st, &fol, 400, &EvolveOptions { tol_step: None, ..Default::default() }).unwrap().0;
        let rk = evolve(&st, &fol, 400, &EvolveOptions { scheme: Scheme::Rk4, tol_step: None, ..Default::default() }).unwrap().0;
        assert!(cn.fidelity(&rk).unwrap() > 1.0 - 1e-6);
    }

    #[test]
    fn two_site_grid_matches_gaussian() {
        let slice = LatticeSlice::flat(2, 1.0, 0.0, PolynomialPotential::mass(1.0)).unwrap();
        let g = GaussianState::ground_state(slice).unwrap().displaced(vec![0.8, -0.3], vec![0.0, 0.2]).unwrap();
        let grid = ZGrid::new(128, 8.0).unwrap();
        let st = WaveFunctional::FullGrid(g.to_full_grid(grid).unwrap());
        let fol = flat_foliation(2, 5, 0.5);
        let (out, rep) = evolve(&st, &fol, 200, &EvolveOptions { tol_step: None, ..Default::default() }).unwrap();
        assert!(rep.max_norm_drift() < 1e-8);
        let exact = gaussian_free_evolution(&g, &fol, 0.5).unwrap();
        let f = out.fidelity(&WaveFunctional::Gaussian(exact)).unwrap();
        assert!(f > 1.0 - 1e-4, "{f}");
    }

    #[test]
    fn gaussian_requires_flat_foliation() {
        let slice = LatticeSlice::flat(2, 1.0, 0.0, PolynomialPotential::mass(1.0)).unwrap();
        let g = WaveFunctional::Gaussian(GaussianState::ground_state(slice).unwrap());
        let fol = Foliation::from_fn(2, 9, BoundaryMode::Periodic, 1.0, 1.0, 2.0, |t, a| {
            (a + 0.1 * (std::f64::consts::PI * a).sin() * (std::f64::consts::PI * t).cos(), t)
        })
        .unwrap();
        assert!(matches!(
            evolve(&g, &fol, 4, &EvolveOptions::default()),
            Err(Error::RepresentationMismatch(_))
        ));
    }

    #[test]
    fn lightlike_slice_stops_evolution() {
        let slice = LatticeSlice::flat(3, 1.0, 0.0, PolynomialPotential::mass(1.0)).unwrap();
        let st = WaveFunctional::FullGrid(
            GaussianState::ground_state(slice).unwrap().to_full_grid(ZGrid::new(8, 5.0).unwrap()).unwrap(),
        );
        // site 0 tilts past the light cone near alpha = 0.83
        let fol = Foliation::from_fn(3, 9, BoundaryMode::Periodic, 1.0, 1.0, 3.0, |t, a| {
            (2.0 * a + 1.386 * a * (2.0 * std::f64::consts::PI * t / 3.0).sin(), t)
        })
        .unwrap();
        let r = evolve(&st, &fol, 10, &EvolveOptions { tol_step: None, ..Default::default() });
        assert!(matches!(r, Err(Error::LightlikePoint { step: 8, site: 0, .. })), "{r:?}");
    }

    #[test]
    fn tangential_check_trivial_cases() {
        let slice = LatticeSlice::flat(2, 1.0, 0.0, PolynomialPotential::mass(1.0)).unwrap();
        let g = GaussianState::ground_state(slice).unwrap().displaced(vec![0.5, 0.1], vec![0.3, 0.0]).unwrap();
        let st = g.to_full_grid(ZGrid::new(32, 6.0).unwrap()).unwrap();
        let opts = EvolveOptions::default();
        assert_eq!(reparameterization_invariance_check(&st, 0.0, &opts).unwrap(), 0.0);
        // two sites: the centered z' vanishes identically
        assert!(reparameterization_invariance_check(&st, 1e-3, &opts).unwrap() <= 1e-10);
    }
}
