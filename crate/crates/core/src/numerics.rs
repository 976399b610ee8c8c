//! Uniform-grid stencils, quadrature weights, local cubic interpolation and
//! convergence-order fitting shared by the geometric and field modules.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// How a uniform parameter grid treats its ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    /// Samples at `0, h, .., 1`; one-sided stencils at both ends.
    FixedEndpoints,
    /// Samples at `0, h, .., 1 - h`; indices wrap.
    Periodic,
}

/// Reads `values[index]` on a periodic grid where the sampled quantity
/// advances by `winding` per period.
#[inline]
fn wrapped(values: &[f64], index: isize, winding: f64) -> f64 {
    let n = values.len() as isize;
    let k = index.rem_euclid(n);
    let laps = (index - k) / n;
    values[k as usize] + laps as f64 * winding
}

/// Second-order first derivative of uniformly sampled data.
///
/// Periodic grids use the central stencil everywhere; fixed grids switch to
/// the one-sided second-order stencil at the two end samples.
pub fn derivative(values: &[f64], step: f64, mode: BoundaryMode, winding: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    match mode {
        BoundaryMode::Periodic => {
            for (i, slot) in out.iter_mut().enumerate() {
                let i = i as isize;
                let ahead = wrapped(values, i + 1, winding);
                let behind = wrapped(values, i - 1, winding);
                *slot = (ahead - behind) / (2.0 * step);
            }
        }
        BoundaryMode::FixedEndpoints => {
            if n == 2 {
                let d = (values[1] - values[0]) / step;
                out[0] = d;
                out[1] = d;
                return out;
            }
            for i in 1..n - 1 {
                out[i] = (values[i + 1] - values[i - 1]) / (2.0 * step);
            }
            out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * step);
            out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * step);
        }
    }
    out
}

/// Trapezoid weights (in units of the step) for fixed grids; all ones for
/// periodic grids, where the rectangle rule is spectrally accurate.
pub fn quadrature_weights(n: usize, mode: BoundaryMode) -> Vec<f64> {
    let mut w = vec![1.0; n];
    if mode == BoundaryMode::FixedEndpoints && n > 1 {
        w[0] = 0.5;
        w[n - 1] = 0.5;
    }
    w
}

/// `sum_i w_i * step * values_i`, summed in index order.
pub fn integrate(values: &[f64], step: f64, mode: BoundaryMode) -> f64 {
    quadrature_weights(values.len(), mode)
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum::<f64>()
        * step
}

/// Lagrange basis values and first derivatives at offset `u` for the nodes
/// `0, 1, .., m-1` (unit spacing).
fn lagrange_basis(m: usize, u: f64) -> ([f64; 4], [f64; 4]) {
    let mut value = [0.0; 4];
    let mut slope = [0.0; 4];
    for k in 0..m {
        let mut denom = 1.0;
        for l in 0..m {
            if l != k {
                denom *= (k as f64) - (l as f64);
            }
        }
        let mut v = 1.0;
        for l in 0..m {
            if l != k {
                v *= u - l as f64;
            }
        }
        let mut d = 0.0;
        for skip in 0..m {
            if skip == k {
                continue;
            }
            let mut term = 1.0;
            for l in 0..m {
                if l != k && l != skip {
                    term *= u - l as f64;
                }
            }
            d += term;
        }
        value[k] = v / denom;
        slope[k] = d / denom;
    }
    (value, slope)
}

/// Local Lagrange interpolation (cubic when at least four samples exist) of
/// uniformly sampled data at parameter `t`, returning value and derivative.
///
/// Exact on polynomials of degree three. When `t` lands on a sample (to
/// 1e-12 in grid units) the stored value is returned unchanged.
pub fn interpolate(
    values: &[f64],
    step: f64,
    mode: BoundaryMode,
    winding: f64,
    t: f64,
) -> (f64, f64) {
    let n = values.len();
    let u = t / step;
    let m = n.min(4);
    if m == 1 {
        return (values[0], 0.0);
    }
    match mode {
        BoundaryMode::FixedEndpoints => {
            let nearest = u.round();
            let exact = (u - nearest).abs() < 1e-12 && nearest >= 0.0 && nearest <= (n - 1) as f64;
            let base = if m == 4 {
                ((u.floor() as isize) - 1).clamp(0, n as isize - 4) as usize
            } else {
                0
            };
            let (bv, bd) = lagrange_basis(m, u - base as f64);
            let slope: f64 = (0..m).map(|k| bd[k] * values[base + k]).sum::<f64>() / step;
            if exact {
                return (values[nearest as usize], slope);
            }
            let value = (0..m).map(|k| bv[k] * values[base + k]).sum();
            (value, slope)
        }
        BoundaryMode::Periodic => {
            let nearest = u.round();
            let exact = (u - nearest).abs() < 1e-12;
            let base = if m == 4 {
                u.floor() as isize - 1
            } else {
                u.floor() as isize
            };
            let (bv, bd) = lagrange_basis(m, u - base as f64);
            let sample = |k: usize| wrapped(values, base + k as isize, winding);
            let slope: f64 = (0..m).map(|k| bd[k] * sample(k)).sum::<f64>() / step;
            if exact {
                return (wrapped(values, nearest as isize, winding), slope);
            }
            let value = (0..m).map(|k| bv[k] * sample(k)).sum();
            (value, slope)
        }
    }
}

/// Least-squares fit of `log(error) = order * log(h) + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub order: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero when only two points are fitted.
    pub std_error: f64,
    /// Half-width of the 95% confidence interval on the slope.
    pub ci95: f64,
}

/// Fits the observed convergence order from (spacing, error) pairs.
///
/// Panics if fewer than two pairs are supplied or any entry is not positive.
pub fn fit_order(spacings: &[f64], errors: &[f64]) -> OrderFit {
    assert_eq!(spacings.len(), errors.len());
    assert!(spacings.len() >= 2, "need at least two refinement levels");
    assert!(
        spacings.iter().chain(errors).all(|v| *v > 0.0),
        "spacings and errors must be positive"
    );
    let xs: Vec<f64> = spacings.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let order = sxy / sxx;
    let intercept = my - order * mx;
    let (std_error, ci95) = if xs.len() > 2 {
        let dof = n - 2.0;
        let sse: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - order * x).powi(2))
            .sum();
        let se = (sse / dof / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, dof)
            .map(|d| d.inverse_cdf(0.975))
            .unwrap_or(f64::NAN);
        (se, t * se)
    } else {
        (0.0, 0.0)
    };
    OrderFit {
        order,
        intercept,
        std_error,
        ci95,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_exact_on_quadratics() {
        let n = 11;
        let h = 1.0 / (n - 1) as f64;
        let v: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(2)).collect();
        let d = derivative(&v, h, BoundaryMode::FixedEndpoints, 0.0);
        for (i, di) in d.iter().enumerate() {
            assert!((di - 2.0 * i as f64 * h).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_winding_is_respected() {
        let n = 8;
        let h = 0.5;
        let v: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let d = derivative(&v, h, BoundaryMode::Periodic, n as f64 * h);
        assert!(d.iter().all(|x| (x - 1.0).abs() < 1e-14));
    }

    #[test]
    fn interpolation_exact_on_cubics() {
        let n = 9;
        let h = 1.0 / (n - 1) as f64;
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t - 3.0 * t.powi(3);
        let df = |t: f64| -2.0 + t - 9.0 * t * t;
        let v: Vec<f64> = (0..n).map(|i| f(i as f64 * h)).collect();
        for t in [0.0, 0.03, 0.31, 0.5, 0.77, 0.999, 1.0] {
            let (val, slope) = interpolate(&v, h, BoundaryMode::FixedEndpoints, 0.0, t);
            assert!((val - f(t)).abs() < 1e-13, "t={t}");
            assert!((slope - df(t)).abs() < 1e-11, "t={t}");
        }
    }

    #[test]
    fn fit_recovers_known_order() {
        let hs = [0.1, 0.05, 0.025];
        let es: Vec<f64> = hs.iter().map(|h| 3.0 * h * h).collect();
        let fit = fit_order(&hs, &es);
        assert!((fit.order - 2.0).abs() < 1e-12);
        assert!(fit.std_error < 1e-10);
    }
}
