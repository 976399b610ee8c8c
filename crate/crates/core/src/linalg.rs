//! Linear solvers: banded LU with partial pivoting for the extremal-field
//! Newton systems and complex BiCGSTAB for Crank–Nicolson steps.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Square banded matrix with `lower` sub-diagonals and `upper`
/// super-diagonals, stored row-wise with room for pivoting fill-in.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        let width = 2 * lower + upper + 1;
        Self {
            n,
            lower,
            upper,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, row: usize, col: usize) -> usize {
        // row window starts at column row - lower
        let offset = col + self.lower - row;
        debug_assert!(offset < self.width, "({row}, {col}) outside band");
        row * self.width + offset
    }

    /// Adds `value` at `(row, col)`; the entry must lie inside the band.
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        assert!(
            col + self.lower >= row && col <= row + self.upper,
            "({row}, {col}) outside band"
        );
        let s = self.slot(row, col);
        self.data[s] += value;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        if col + self.lower < row || col > row + self.upper + self.lower {
            return 0.0;
        }
        self.data[self.slot(row, col)]
    }

    /// Factors in place and solves `A x = rhs`, overwriting `rhs` with `x`.
    pub fn solve_in_place(mut self, rhs: &mut [f64]) -> Result<()> {
        let n = self.n;
        assert_eq!(rhs.len(), n);
        let kl = self.lower;
        let reach = kl + self.upper;
        let mut pivots = vec![0usize; n];
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + reach).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for r in k + 1..=last_row {
                let v = self.get(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= scale * f64::EPSILON * n as f64 || best == 0.0 {
                return Err(Error::LinearSolver(format!("singular pivot at column {k}")));
            }
            pivots[k] = p;
            if p != k {
                for c in k..=last_col {
                    let a = self.slot(k, c);
                    let b = self.slot(p, c);
                    self.data.swap(a, b);
                }
            }
            let diag = self.data[self.slot(k, k)];
            for r in k + 1..=last_row {
                let s = self.slot(r, k);
                let l = self.data[s] / diag;
                self.data[s] = l;
                if l == 0.0 {
                    continue;
                }
                for c in k + 1..=last_col {
                    let upd = l * self.data[self.slot(k, c)];
                    let t = self.slot(r, c);
                    self.data[t] -= upd;
                }
            }
        }
        for k in 0..n {
            let p = pivots[k];
            if p != k {
                rhs.swap(k, p);
            }
            let bk = rhs[k];
            for r in k + 1..=(k + kl).min(n - 1) {
                rhs[r] -= self.data[self.slot(r, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = rhs[k];
            for c in k + 1..=(k + reach).min(n - 1) {
                acc -= self.data[self.slot(k, c)] * rhs[c];
            }
            rhs[k] = acc / self.data[self.slot(k, k)];
        }
        Ok(())
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.par_chunks(4096)
        .zip(b.par_chunks(4096))
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u.conj() * v).sum::<Complex64>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

fn norm(a: &[Complex64]) -> f64 {
    dot(a, a).re.sqrt()
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy)]
pub struct IterativeStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// BiCGSTAB for a complex linear operator. `x` holds the initial guess and
/// receives the solution.
pub fn bicgstab<F>(
    apply: F,
    rhs: &[Complex64],
    x: &mut [Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<IterativeStats>
where
    F: Fn(&[Complex64], &mut [Complex64]),
{
    let n = rhs.len();
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        return Ok(IterativeStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut tmp = vec![Complex64::new(0.0, 0.0); n];
    apply(x, &mut tmp);
    let mut r: Vec<Complex64> = rhs.iter().zip(&tmp).map(|(b, a)| b - a).collect();
    let r_hat = r.clone();
    let mut p = vec![Complex64::new(0.0, 0.0); n];
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut s = vec![Complex64::new(0.0, 0.0); n];
    let mut t = vec![Complex64::new(0.0, 0.0); n];
    let one = Complex64::new(1.0, 0.0);
    let (mut rho, mut alpha, mut omega) = (one, one, one);
    let mut rel = norm(&r) / b_norm;
    if rel <= tol {
        return Ok(IterativeStats {
            iterations: 0,
            relative_residual: rel,
        });
    }
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.norm() == 0.0 {
            return Err(Error::LinearSolver("BiCGSTAB breakdown (rho = 0)".into()));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        p.par_iter_mut()
            .zip(r.par_iter())
            .zip(v.par_iter())
            .for_each(|((pi, ri), vi)| *pi = ri + beta * (*pi - omega * vi));
        apply(&p, &mut v);
        alpha = rho / dot(&r_hat, &v);
        s.par_iter_mut()
            .zip(r.par_iter())
            .zip(v.par_iter())
            .for_each(|((si, ri), vi)| *si = ri - alpha * vi);
        if norm(&s) / b_norm <= tol {
            x.par_iter_mut()
                .zip(p.par_iter())
                .for_each(|(xi, pi)| *xi += alpha * pi);
            return Ok(IterativeStats {
                iterations: it,
                relative_residual: norm(&s) / b_norm,
            });
        }
        apply(&s, &mut t);
        let tt = dot(&t, &t);
        omega = dot(&t, &s) / tt;
        x.par_iter_mut()
            .zip(p.par_iter().zip(s.par_iter()))
            .for_each(|(xi, (pi, si))| *xi += alpha * pi + omega * si);
        r.par_iter_mut()
            .zip(s.par_iter().zip(t.par_iter()))
            .for_each(|(ri, (si, ti))| *ri = si - omega * ti);
        rel = norm(&r) / b_norm;
        if rel <= tol {
            return Ok(IterativeStats {
                iterations: it,
                relative_residual: rel,
            });
        }
    }
    Err(Error::LinearSolver(format!(
        "BiCGSTAB did not reach {tol:e} in {max_iter} iterations (residual {rel:e})"
    )))
}
