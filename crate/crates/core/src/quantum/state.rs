use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::lattice::LatticeSlice;

/// Largest site count accepted for full-grid states.
pub const MAX_GRID_SITES: usize = 4;

const CHUNK: usize = 4096;

/// Sum of `f(k)` for `k < len`, evaluated in parallel over fixed chunks and
/// accumulated in index order, so the result does not depend on the pool.
pub(crate) fn ordered_sum<T, F>(len: usize, f: F) -> T
where
    T: Send + Copy + Default + std::ops::Add<Output = T> + std::iter::Sum<T>,
    F: Fn(usize) -> T + Sync,
{
    let partial: Vec<T> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(len)).map(&f).sum())
        .collect();
    partial.into_iter().fold(T::default(), |a, b| a + b)
}

/// Uniform grid of `points` values on `[-half_width, half_width]` for every
/// site variable; the wave functional vanishes outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZGrid {
    pub points: usize,
    pub half_width: f64,
}

impl Default for ZGrid {
    fn default() -> Self {
        Self {
            points: 128,
            half_width: 8.0,
        }
    }
}

impl ZGrid {
    pub fn new(points: usize, half_width: f64) -> Result<Self> {
        if points < 4 || !(half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "z-grid needs at least 4 points and a positive half-width (got {points}, {half_width})"
            )));
        }
        Ok(Self { points, half_width })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    #[inline]
    pub fn coord(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.spacing()
    }

    /// Trapezoid weight of grid point `k`.
    #[inline]
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.points {
            0.5 * self.spacing()
        } else {
            self.spacing()
        }
    }
}

/// Wave functional tabulated on `G^M` grid points; site 0 varies slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct FullGridState {
    pub slice: LatticeSlice,
    pub grid: ZGrid,
    pub psi: Vec<Complex64>,
}

impl FullGridState {
    pub fn new(slice: LatticeSlice, grid: ZGrid, psi: Vec<Complex64>) -> Result<Self> {
        let m = slice.sites();
        if m > MAX_GRID_SITES {
            return Err(Error::RepresentationMismatch(format!(
                "full-grid states support at most {MAX_GRID_SITES} sites, got {m}"
            )));
        }
        let len = grid.points.pow(m as u32);
        if psi.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "{} amplitudes for a {}^{m} grid",
                psi.len(),
                grid.points
            )));
        }
        Ok(Self { slice, grid, psi })
    }

    /// Tabulates `f(z)` at every grid point.
    pub fn from_fn(slice: LatticeSlice, grid: ZGrid, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Result<Self> {
        let m = slice.sites();
        if m > MAX_GRID_SITES {
            return Err(Error::RepresentationMismatch(format!(
                "full-grid states support at most {MAX_GRID_SITES} sites, got {m}"
            )));
        }
        let len = grid.points.pow(m as u32);
        let psi = (0..len)
            .into_par_iter()
            .map(|idx| {
                let mut z = [0.0; MAX_GRID_SITES];
                decode(idx, m, &grid, &mut z);
                f(&z[..m])
            })
            .collect();
        Ok(Self { slice, grid, psi })
    }

    pub fn sites(&self) -> usize {
        self.slice.sites()
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    /// Stride of site `i` in the flat index.
    pub fn stride(&self, i: usize) -> usize {
        self.grid.points.pow((self.sites() - 1 - i) as u32)
    }

    /// Product of trapezoid weights at flat index `idx`.
    fn weight(&self, idx: usize) -> f64 {
        let g = self.grid.points;
        let mut w = 1.0;
        let mut rest = idx;
        for _ in 0..self.sites() {
            w *= self.grid.weight(rest % g);
            rest /= g;
        }
        w
    }

    /// `sum w conj(self) other` over the grid.
    pub fn inner(&self, other: &FullGridState) -> Result<Complex64> {
        if self.grid != other.grid || self.sites() != other.sites() {
            return Err(Error::RepresentationMismatch("states live on different grids".into()));
        }
        Ok(ordered_sum(self.len(), |k| self.psi[k].conj() * other.psi[k] * self.weight(k)))
    }

    pub fn norm(&self) -> f64 {
        ordered_sum(self.len(), |k| self.psi[k].norm_sqr() * self.weight(k))
    }

    pub fn normalize(&mut self) {
        let s = 1.0 / self.norm().sqrt();
        self.psi.par_iter_mut().for_each(|v| *v *= s);
    }

    /// `|<a|b>|^2 / (<a|a> <b|b>)`.
    pub fn fidelity(&self, other: &FullGridState) -> Result<f64> {
        let ab = self.inner(other)?;
        Ok(ab.norm_sqr() / (self.norm() * other.norm()))
    }

    /// `<z_i>` with respect to the normalized state.
    pub fn mean(&self, i: usize) -> f64 {
        let g = self.grid;
        let stride = self.stride(i);
        ordered_sum(self.len(), |k| {
            self.psi[k].norm_sqr() * self.weight(k) * g.coord((k / stride) % g.points)
        }) / self.norm()
    }

    /// `<z_i z_j>` with respect to the normalized state.
    pub fn second_moment(&self, i: usize, j: usize) -> f64 {
        let g = self.grid;
        let (si, sj) = (self.stride(i), self.stride(j));
        ordered_sum(self.len(), |k| {
            self.psi[k].norm_sqr()
                * self.weight(k)
                * g.coord((k / si) % g.points)
                * g.coord((k / sj) % g.points)
        }) / self.norm()
    }

    /// Expectation of the lattice Hamiltonian of a straight slice with
    /// spacing `a = y' dtau`:
    /// `sum_i [-(1/2a) d^2/dz_i^2 + (a/2)((z_{i+1} - z_i)/a)^2 - a p(z_i)]`.
    pub fn energy(&self) -> f64 {
        let m = self.sites();
        let g = self.grid;
        let dz = g.spacing();
        let a = self.slice.spacing();
        let kin = 1.0 / (2.0 * a * dz * dz);
        let strides: Vec<usize> = (0..m).map(|i| self.stride(i)).collect();
        let p = &self.slice.potential;
        let e = ordered_sum(self.len(), |idx| {
            let mut z = [0.0; MAX_GRID_SITES];
            let mut ks = [0usize; MAX_GRID_SITES];
            decode_with_indices(idx, m, &g, &mut z, &mut ks);
            let psi = self.psi[idx];
            let mut pot = 0.0;
            let mut lap = Complex64::new(0.0, 0.0);
            for i in 0..m {
                let next = (i + 1) % m;
                let dzf = (z[next] - z[i]) / a;
                pot += 0.5 * a * dzf * dzf - a * p.eval(z[i]);
                let up = if ks[i] + 1 < g.points { self.psi[idx + strides[i]] } else { Complex64::new(0.0, 0.0) };
                let down = if ks[i] > 0 { self.psi[idx - strides[i]] } else { Complex64::new(0.0, 0.0) };
                lap += up - 2.0 * psi + down;
            }
            let h = psi * pot - lap * kin;
            (psi.conj() * h).re * self.weight(idx)
        });
        e / self.norm()
    }
}

/// Grid coordinates of flat index `idx`.
#[inline]
pub(crate) fn decode(idx: usize, m: usize, grid: &ZGrid, z: &mut [f64]) {
    let mut rest = idx;
    for i in (0..m).rev() {
        z[i] = grid.coord(rest % grid.points);
        rest /= grid.points;
    }
}

#[inline]
pub(crate) fn decode_with_indices(idx: usize, m: usize, grid: &ZGrid, z: &mut [f64], ks: &mut [usize]) {
    let mut rest = idx;
    for i in (0..m).rev() {
        ks[i] = rest % grid.points;
        z[i] = grid.coord(ks[i]);
        rest /= grid.points;
    }
}

/// `Psi(z) = exp(-(z - q)^T K (z - q) / 2 + i p^T (z - q) + c)` with a complex
/// symmetric kernel `K` (row-major), real mean `q` and momentum `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub slice: LatticeSlice,
    pub kernel: Vec<Complex64>,
    pub mean: Vec<f64>,
    pub momentum: Vec<f64>,
    pub log_norm: Complex64,
}

/// Either representation of a wave functional.
#[derive(Debug, Clone, PartialEq)]
pub enum WaveFunctional {
    FullGrid(FullGridState),
    Gaussian(GaussianState),
}

impl WaveFunctional {
    pub fn slice(&self) -> &LatticeSlice {
        match self {
            WaveFunctional::FullGrid(s) => &s.slice,
            WaveFunctional::Gaussian(s) => &s.slice,
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            WaveFunctional::FullGrid(s) => s.norm(),
            WaveFunctional::Gaussian(s) => s.norm(),
        }
    }

    pub fn energy(&self) -> f64 {
        match self {
            WaveFunctional::FullGrid(s) => s.energy(),
            WaveFunctional::Gaussian(s) => s.energy(),
        }
    }

    pub fn expectation(&self, observable: Observable) -> f64 {
        match (self, observable) {
            (_, Observable::Norm) => self.norm(),
            (_, Observable::Energy) => self.energy(),
            (WaveFunctional::FullGrid(s), Observable::Mean(i)) => s.mean(i),
            (WaveFunctional::FullGrid(s), Observable::SecondMoment(i, j)) => s.second_moment(i, j),
            (WaveFunctional::Gaussian(s), Observable::Mean(i)) => s.mean[i],
            (WaveFunctional::Gaussian(s), Observable::SecondMoment(i, j)) => s.second_moment(i, j),
        }
    }

    /// Full-grid form of the state (Gaussian states are tabulated).
    pub fn to_full_grid(&self, grid: ZGrid) -> Result<FullGridState> {
        match self {
            WaveFunctional::FullGrid(s) if s.grid == grid => Ok(s.clone()),
            WaveFunctional::FullGrid(_) => Err(Error::RepresentationMismatch(
                "full-grid state requested on a different grid".into(),
            )),
            WaveFunctional::Gaussian(s) => s.to_full_grid(grid),
        }
    }

    pub fn fidelity(&self, other: &WaveFunctional) -> Result<f64> {
        match (self, other) {
            (WaveFunctional::FullGrid(a), b) | (b, WaveFunctional::FullGrid(a)) => {
                a.fidelity(&b.to_full_grid(a.grid)?)
            }
            (WaveFunctional::Gaussian(a), WaveFunctional::Gaussian(b)) => a.fidelity(b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    Norm,
    Mean(usize),
    SecondMoment(usize, usize),
    Energy,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::PolynomialPotential;

    #[test]
    fn ordered_sum_is_exact_on_integers() {
        let s: f64 = ordered_sum(10_000, |k| k as f64);
        assert_eq!(s, 49_995_000.0);
    }

    #[test]
    fn gaussian_moments_on_grid() {
        let slice = LatticeSlice::flat(1, 1.0, 0.0, PolynomialPotential::mass(1.0)).unwrap();
        let grid = ZGrid::new(257, 8.0).unwrap();
        let st = FullGridState::from_fn(slice, grid, |z| Complex64::new((-0.5 * z[0] * z[0]).exp(), 0.0)).unwrap();
        assert!((st.norm() - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        assert!(st.mean(0).abs() < 1e-14);
        assert!((st.second_moment(0, 0) - 0.5).abs() < 1e-12);
        assert!((st.energy() - 0.5).abs() < 1e-3);
        assert!((st.fidelity(&st).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn too_many_sites_are_rejected() {
        let slice = LatticeSlice::flat(5, 1.0, 0.0, PolynomialPotential::zero()).unwrap();
        assert!(FullGridState::from_fn(slice, ZGrid::new(4, 1.0).unwrap(), |_| Complex64::new(1.0, 0.0)).is_err());
    }
}
