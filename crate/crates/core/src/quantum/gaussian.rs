//! Gaussian wave functionals of the free lattice field: closed-form
//! moments, the ground state and exact evolution on flat foliations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::curves::Foliation;
use crate::error::{Error, Result};
use crate::models::PolynomialPotential;

use super::lattice::LatticeSlice;
use super::state::{FullGridState, GaussianState, ZGrid};

type CMatrix = DMatrix<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `(c0, m)` for `p = c0 - m^2 z^2 / 2` with `m > 0`.
pub(crate) fn quadratic_parts(p: &PolynomialPotential) -> Result<(f64, f64)> {
    let c = p.coeffs();
    let get = |k: usize| c.get(k).copied().unwrap_or(0.0);
    if c.iter().skip(3).any(|v| *v != 0.0) || get(1) != 0.0 || !(get(2) < 0.0) {
        return Err(Error::NonQuadraticPotential);
    }
    Ok((get(0), (-2.0 * get(2)).sqrt()))
}

/// Normal modes of a straight slice: `V = m^2 + L / a^2` with `L` the
/// periodic forward-difference Laplacian, and spacing `a`.
pub(crate) struct Modes {
    pub spacing: f64,
    pub offset: f64,
    pub potential: DMatrix<f64>,
    pub vectors: DMatrix<f64>,
    pub omega: DVector<f64>,
}

impl Modes {
    pub fn new(slice: &LatticeSlice) -> Result<Self> {
        if !slice.is_flat() {
            return Err(Error::RepresentationMismatch(
                "Gaussian states need straight slices".into(),
            ));
        }
        let (c0, mass) = quadratic_parts(&slice.potential)?;
        let m = slice.sites();
        let a = slice.spacing();
        let mut v = DMatrix::<f64>::identity(m, m) * (mass * mass);
        for i in 0..m {
            let j = (i + 1) % m;
            let w = 1.0 / (a * a);
            v[(i, i)] += w;
            v[(j, j)] += w;
            v[(i, j)] -= w;
            v[(j, i)] -= w;
        }
        let eig = SymmetricEigen::new(v.clone());
        Ok(Self {
            spacing: a,
            offset: c0,
            potential: v,
            vectors: eig.eigenvectors,
            omega: eig.eigenvalues.map(f64::sqrt),
        })
    }

    fn diag_function(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&self.omega.map(f));
        &self.vectors * d * self.vectors.transpose()
    }

    /// `a Omega`, the ground-state kernel.
    pub fn ground_kernel(&self) -> DMatrix<f64> {
        let a = self.spacing;
        self.diag_function(|w| a * w)
    }

    /// `sum_k omega_k / 2 - a M c0`.
    pub fn ground_energy(&self) -> f64 {
        0.5 * self.omega.sum() - self.spacing * self.omega.len() as f64 * self.offset
    }
}

fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

impl GaussianState {
    fn kernel_matrix(&self) -> CMatrix {
        let m = self.mean.len();
        CMatrix::from_row_slice(m, m, &self.kernel)
    }

    fn real_kernel(&self) -> DMatrix<f64> {
        self.kernel_matrix().map(|v| v.re)
    }

    /// Normalized ground state of the free field on a straight slice.
    pub fn ground_state(slice: LatticeSlice) -> Result<Self> {
        let modes = Modes::new(&slice)?;
        let k = modes.ground_kernel();
        let m = slice.sites();
        let mut s = Self {
            kernel: to_complex(&k).transpose().as_slice().to_vec(),
            mean: vec![0.0; m],
            momentum: vec![0.0; m],
            log_norm: Complex64::new(0.0, 0.0),
            slice,
        };
        s.normalize();
        Ok(s)
    }

    /// Displaced (coherent) copy of the state.
    pub fn displaced(mut self, mean: Vec<f64>, momentum: Vec<f64>) -> Result<Self> {
        let m = self.mean.len();
        if mean.len() != m || momentum.len() != m {
            return Err(Error::ShapeMismatch(format!("displacement for {m} sites")));
        }
        self.mean = mean;
        self.momentum = momentum;
        Ok(self)
    }

    pub fn sites(&self) -> usize {
        self.mean.len()
    }

    pub fn eval(&self, z: &[f64]) -> Complex64 {
        let m = self.sites();
        let mut quad = Complex64::new(0.0, 0.0);
        let mut lin = 0.0;
        for i in 0..m {
            let ui = z[i] - self.mean[i];
            lin += self.momentum[i] * ui;
            for j in 0..m {
                quad += self.kernel[i * m + j] * ui * (z[j] - self.mean[j]);
            }
        }
        (-0.5 * quad + I * lin + self.log_norm).exp()
    }

    /// `int |Psi|^2 = exp(2 Re c) pi^(M/2) / sqrt(det Re K)`.
    pub fn norm(&self) -> f64 {
        let det = self.real_kernel().determinant();
        (2.0 * self.log_norm.re).exp() * PI.powf(0.5 * self.sites() as f64) / det.sqrt()
    }

    pub fn normalize(&mut self) {
        self.log_norm.re -= 0.5 * self.norm().ln();
    }

    /// `<(z - q)(z - q)^T> = (Re K)^-1 / 2`.
    pub fn covariance(&self) -> DMatrix<f64> {
        self.real_kernel()
            .try_inverse()
            .expect("Gaussian kernel with singular real part")
            * 0.5
    }

    pub fn second_moment(&self, i: usize, j: usize) -> f64 {
        self.mean[i] * self.mean[j] + self.covariance()[(i, j)]
    }

    /// Closed-form expectation of the straight-slice lattice Hamiltonian.
    /// Non-quadratic potentials give `NaN`.
    pub fn energy(&self) -> f64 {
        let Ok(modes) = Modes::new(&self.slice) else {
            return f64::NAN;
        };
        let a = modes.spacing;
        let k = self.kernel_matrix();
        let sigma = to_complex(&self.covariance());
        let pp: f64 = self.momentum.iter().map(|v| v * v).sum();
        let kin = pp + (k.conjugate() * &sigma * &k).trace().re;
        let q = DVector::from_column_slice(&self.mean);
        let zz = &q * q.transpose() + self.covariance();
        let pot = (&modes.potential * zz).trace();
        kin / (2.0 * a) + 0.5 * a * pot - a * self.sites() as f64 * modes.offset
    }

    pub fn to_full_grid(&self, grid: ZGrid) -> Result<FullGridState> {
        FullGridState::from_fn(self.slice.clone(), grid, |z| self.eval(z))
    }

    /// `|<a|b>|^2 / (<a|a> <b|b>)` in closed form.
    pub fn fidelity(&self, other: &GaussianState) -> Result<f64> {
        let m = self.sites();
        if other.sites() != m {
            return Err(Error::RepresentationMismatch("Gaussian states on different lattices".into()));
        }
        // conj(a) b = exp(-u^T A u / 2 + B^T u + C) with u = z
        let ka = self.kernel_matrix().conjugate();
        let kb = other.kernel_matrix();
        let qa = DVector::from_column_slice(&self.mean).map(|v| Complex64::new(v, 0.0));
        let qb = DVector::from_column_slice(&other.mean).map(|v| Complex64::new(v, 0.0));
        let pa = DVector::from_column_slice(&self.momentum).map(|v| Complex64::new(v, 0.0));
        let pb = DVector::from_column_slice(&other.momentum).map(|v| Complex64::new(v, 0.0));
        let a = &ka + &kb;
        let b = &ka * &qa + &kb * &qb - pa.map(|v| I * v) + pb.map(|v| I * v);
        let c = -0.5 * (qa.transpose() * &ka * &qa)[(0, 0)] - 0.5 * (qb.transpose() * &kb * &qb)[(0, 0)]
            + I * (pa.dot(&qa) - pb.dot(&qb))
            + self.log_norm.conj()
            + other.log_norm;
        let lu = a.clone().lu();
        let det = lu.determinant();
        let ainv_b = lu.solve(&b).ok_or(Error::NonQuadraticPotential)?;
        let log_overlap = c + 0.5 * (b.transpose() * ainv_b)[(0, 0)] + 0.5 * m as f64 * (2.0 * PI).ln()
            - 0.5 * det.ln();
        Ok((2.0 * log_overlap.re).exp() / (self.norm() * other.norm()))
    }
}

/// Symplectic propagator blocks of `H = t_rate [p^2/(2a) + a q^T V q / 2]`
/// over a time `t`: `q' = A q + B p`, `p' = C q + D p`.
fn propagator(modes: &Modes, t: f64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let a = modes.spacing;
    let cos = modes.diag_function(|w| (w * t).cos());
    let sin_over = modes.diag_function(|w| (w * t).sin() / (a * w));
    let sin_times = modes.diag_function(|w| -a * w * (w * t).sin());
    (cos, sin_over, sin_times)
}

/// Exact evolution of a Gaussian state of the free field over the time `t`
/// measured along the (uniform) lapse.
pub(crate) fn evolve_for_time(state: &GaussianState, t: f64) -> Result<GaussianState> {
    let modes = Modes::new(&state.slice)?;
    let m = state.sites();
    if t == 0.0 {
        return Ok(state.clone());
    }
    let k0 = state.kernel_matrix();
    let gamma0 = k0.map(|v| I * v);
    let q0 = DVector::from_column_slice(&state.mean);
    let p0 = DVector::from_column_slice(&state.momentum);

    // track arg det Z continuously along [0, t]
    let omega_max = modes.omega.max();
    let gamma_scale = gamma0.iter().map(|v| v.norm()).fold(1.0, f64::max) / modes.spacing;
    let substeps = ((t.abs() * (omega_max + gamma_scale) / 0.25).ceil() as usize).max(1);
    let mut phase = 0.0;
    let mut prev_arg = 0.0;
    let mut z = CMatrix::identity(m, m);
    let mut blocks = propagator(&modes, 0.0);
    for s in 1..=substeps {
        let ts = t * s as f64 / substeps as f64;
        blocks = propagator(&modes, ts);
        let (ref a, ref b, _) = blocks;
        z = to_complex(a) + to_complex(b) * &gamma0;
        let arg = z.determinant().arg();
        let mut d = arg - prev_arg;
        d -= 2.0 * PI * (d / (2.0 * PI)).round();
        phase += d;
        prev_arg = arg;
    }
    let (a, b, c) = blocks;
    let d = a.clone();
    let det_z = z.determinant();
    let log_det = Complex64::new(det_z.norm().ln(), phase);
    let zinv = z.try_inverse().ok_or_else(|| Error::LinearSolver("singular Gaussian propagator".into()))?;
    let gamma = (to_complex(&c) + to_complex(&d) * &gamma0) * zinv;
    let kernel = gamma.map(|v| -I * v);
    let kernel = (&kernel + kernel.transpose()) * Complex64::new(0.5, 0.0);
    let q = &a * &q0 + &b * &p0;
    let p = &c * &q0 + &d * &p0;
    let action = 0.5 * (p.dot(&q) - p0.dot(&q0)) + modes.spacing * m as f64 * modes.offset * t;
    Ok(GaussianState {
        slice: state.slice.clone(),
        kernel: kernel.transpose().as_slice().to_vec(),
        mean: q.as_slice().to_vec(),
        momentum: p.as_slice().to_vec(),
        log_norm: state.log_norm + I * action - 0.5 * log_det,
    })
}

/// Ground-state energy `sum_k omega_k / 2 - a M c0` of the free lattice
/// field on a flat slice.
pub fn ground_energy(slice: &LatticeSlice) -> Result<f64> {
    Ok(Modes::new(slice)?.ground_energy())
}

/// Exact free evolution along a flat foliation from `alpha = 0` to
/// `alpha = duration`. The state must live on the slice at `alpha = 0`.
pub fn gaussian_free_evolution(state: &GaussianState, foliation: &Foliation, duration: f64) -> Result<GaussianState> {
    quadratic_parts(&state.slice.potential)?;
    if !foliation.is_flat() {
        return Err(Error::RepresentationMismatch(
            "exact Gaussian evolution needs a flat foliation".into(),
        ));
    }
    if foliation.n_tau != state.sites() {
        return Err(Error::ShapeMismatch(format!(
            "foliation has {} sites, state has {}",
            foliation.n_tau,
            state.sites()
        )));
    }
    let start = foliation.slice_geometry(0.0);
    let end = foliation.slice_geometry(duration);
    let t = end.x[0] - start.x[0];
    let mut out = evolve_for_time(state, t)?;
    out.slice = LatticeSlice::from_foliation(foliation, duration, state.slice.potential.clone())?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::BoundaryMode;

    fn slice(m: usize) -> LatticeSlice {
        LatticeSlice::flat(m, 1.0, 0.0, PolynomialPotential::mass(1.0)).unwrap()
    }

    #[test]
    fn ground_state_moments() {
        let g = GaussianState::ground_state(slice(1)).unwrap();
        assert!((g.norm() - 1.0).abs() < 1e-12);
        assert!((g.second_moment(0, 0) - 0.5).abs() < 1e-14);
        assert!((g.energy() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn ground_state_only_picks_up_a_phase() {
        let g = GaussianState::ground_state(slice(2)).unwrap();
        let e0 = Modes::new(&g.slice).unwrap().ground_energy();
        assert!((e0 - 0.5 * (1.0 + 5.0_f64.sqrt())).abs() < 1e-13);
        let t = 2.7;
        let h = evolve_for_time(&g, t).unwrap();
        for (a, b) in g.kernel.iter().zip(&h.kernel) {
            assert!((a - b).norm() < 1e-12);
        }
        let dc = h.log_norm - g.log_norm;
        assert!(dc.re.abs() < 1e-12);
        let dphase = dc.im + e0 * t;
        assert!((dphase - 2.0 * PI * (dphase / (2.0 * PI)).round()).abs() < 1e-12, "{dphase}");
    }

    #[test]
    fn squeezed_kernel_is_periodic() {
        let mut g = GaussianState::ground_state(slice(1)).unwrap();
        g.kernel[0] *= 2.0;
        g.normalize();
        let h = evolve_for_time(&g, PI).unwrap();
        assert!((h.kernel[0] - g.kernel[0]).norm() < 1e-12);
        let mid = evolve_for_time(&g, 0.5 * PI).unwrap();
        assert!((mid.kernel[0] - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        assert!((mid.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn displaced_mean_follows_cosine() {
        let g = GaussianState::ground_state(slice(1)).unwrap().displaced(vec![1.5], vec![0.0]).unwrap();
        for t in [0.3, 1.0, 2.5] {
            let h = evolve_for_time(&g, t).unwrap();
            assert!((h.mean[0] - 1.5 * t.cos()).abs() < 1e-13);
            assert!((h.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fidelity_closed_form_matches_grid() {
        let a = GaussianState::ground_state(slice(2)).unwrap();
        let b = evolve_for_time(&a.clone().displaced(vec![0.3, -0.2], vec![0.1, 0.4]).unwrap(), 0.7).unwrap();
        let grid = ZGrid::new(96, 7.0).unwrap();
        let exact = a.fidelity(&b).unwrap();
        let tab = a.to_full_grid(grid).unwrap().fidelity(&b.to_full_grid(grid).unwrap()).unwrap();
        assert!((exact - tab).abs() < 1e-10, "{exact} {tab}");
        assert!((a.fidelity(&a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_quadratic_potential_is_rejected() {
        let s = LatticeSlice::flat(1, 1.0, 0.0, PolynomialPotential::new(vec![0.0, 0.0, -0.5, 0.1])).unwrap();
        assert_eq!(GaussianState::ground_state(s).unwrap_err(), Error::NonQuadraticPotential);
    }

    #[test]
    fn flat_foliation_duration() {
        let g = GaussianState::ground_state(slice(1)).unwrap().displaced(vec![1.0], vec![0.0]).unwrap();
        let fol = Foliation::from_fn(1, 11, BoundaryMode::Periodic, 1.0, 1.0, 1.0, |t, a| (2.0 * a, t)).unwrap();
        let h = gaussian_free_evolution(&g, &fol, 1.0).unwrap();
        assert!((h.mean[0] - 2.0_f64.cos()).abs() < 1e-12);
        assert!((h.slice.x[0] - 2.0).abs() < 1e-12);
    }
}
