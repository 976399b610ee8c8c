#![allow(dead_code)]

use vardiff_core::models::LagrangianModel;
use vardiff_core::presets::SweepCase;

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[k] = x;
        weights[k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `integral over 0 <= y <= 1, x_left(y) <= x <= x_right(y) of F dx dy`
/// with slopes from fourth-order central differences of the field.
pub fn exact_sweep_action(case: &SweepCase, order: usize) -> f64 {
    let model: LagrangianModel = (case.model)();
    let (nodes, weights) = gauss_legendre(order);
    let f = case.field;
    let h = 1e-3;
    let d = |g: &dyn Fn(f64) -> f64| (g(-2.0 * h) - 8.0 * g(-h) + 8.0 * g(h) - g(2.0 * h)) / (12.0 * h);
    let mut total = 0.0;
    for (yn, yw) in nodes.iter().zip(&weights) {
        let y = 0.5 * (yn + 1.0);
        let (a, b) = (case.x_left(y), case.x_right(y));
        let mut row = 0.0;
        for (xn, xw) in nodes.iter().zip(&weights) {
            let x = a + 0.5 * (b - a) * (xn + 1.0);
            let z = f(x, y);
            let zx = d(&|e| f(x + e, y));
            let zy = d(&|e| f(x, y + e));
            row += xw * model.eval_lagrangian(x, y, z, zx, zy);
        }
        total += yw * row * 0.5 * (b - a);
    }
    0.5 * total
}

/// Self-check of the quadrature oracle: 10 nodes integrate x^18 exactly.
pub fn check_gauss_legendre() {
    let (x, w) = gauss_legendre(10);
    let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
    assert!((s - 2.0 / 19.0).abs() < 1e-14, "Gauss-Legendre oracle is off: {s}");
}
