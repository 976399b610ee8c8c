use num_complex::Complex64;
use proptest::prelude::*;
use vardiff_core::action::{indicatrice_gradient, phi, propagation_time};
use vardiff_core::curves::{reparameterize, Curve, Deformation, Foliation, ParamSurface};
use vardiff_core::eikonal::{constraint_residual, hj_residual_generic, momenta_from_slopes};
use vardiff_core::models::{LagrangianModel, PolynomialPotential};
use vardiff_core::numerics::BoundaryMode;
use vardiff_core::quantum::{evolve, EvolveOptions, FullGridState, GaussianState, LatticeSlice, WaveFunctional, ZGrid};

fn model(elliptic: bool, c: [f64; 4]) -> LagrangianModel {
    let p = PolynomialPotential::new(c.to_vec());
    if elliptic {
        LagrangianModel::elliptic(p)
    } else {
        LagrangianModel::hyperbolic(p)
    }
}

fn coeffs() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-1.0..1.0f64)
}

/// Smooth upward curve with a small wobble; `y' >= 1 - 2|b|`.
fn wobbly(n: usize, a: f64, b: f64, c: f64) -> Curve {
    Curve::from_fn(n, BoundaryMode::FixedEndpoints, |t| {
        (
            0.3 + a * (3.0 * t).sin(),
            t + b * (2.0 * t).sin() * 0.5,
            c * (1.0 + t * t),
        )
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partials_match_finite_differences(
        elliptic in any::<bool>(),
        c in coeffs(),
        z in -1.5..1.5f64,
        zx in -2.0..2.0f64,
        zy in -2.0..2.0f64,
    ) {
        let m = model(elliptic, c);
        let f = |z: f64, zx: f64, zy: f64| m.eval_lagrangian(0.0, 0.0, z, zx, zy);
        let h = 1e-5;
        let p = m.eval_partials(0.0, 0.0, z, zx, zy);
        let fd_zx = (f(z, zx + h, zy) - f(z, zx - h, zy)) / (2.0 * h);
        let fd_zy = (f(z, zx, zy + h) - f(z, zx, zy - h)) / (2.0 * h);
        let fd_z = (f(z + h, zx, zy) - f(z - h, zx, zy)) / (2.0 * h);
        prop_assert!((p.f_zx - fd_zx).abs() < 1e-7);
        prop_assert!((p.f_zy - fd_zy).abs() < 1e-7);
        prop_assert!((p.f_z - fd_z).abs() < 1e-7);
    }

    #[test]
    fn phi_is_odd_and_homogeneous(
        elliptic in any::<bool>(),
        c in coeffs(),
        a in -0.2..0.2f64,
        b in -0.4..0.4f64,
        zc in -1.0..1.0f64,
        s in 0.1..5.0f64,
        d in prop::array::uniform3(-0.5..0.5f64),
    ) {
        let m = model(elliptic, c);
        let curve = wobbly(21, a, b, zc);
        let defo = Deformation::from_fn(&curve, |t| (1.0 + d[0] * t, d[1] * t, d[2] + t));
        let base = phi(&m, &curve, &defo).unwrap();
        let scaled = phi(&m, &curve, &defo.scaled(s)).unwrap();
        let flipped = phi(&m, &curve, &defo.scaled(-1.0)).unwrap();
        let tol = 1e-12 * (1.0 + base.abs());
        prop_assert!((scaled - s * base).abs() <= s * tol);
        prop_assert!((flipped + base).abs() <= tol);
    }

    #[test]
    fn euler_identity_holds(
        elliptic in any::<bool>(),
        c in coeffs(),
        a in -0.2..0.2f64,
        b in -0.4..0.4f64,
        zc in -1.0..1.0f64,
        d in prop::array::uniform3(-0.5..0.5f64),
    ) {
        let m = model(elliptic, c);
        let curve = wobbly(17, a, b, zc);
        let defo = Deformation::from_fn(&curve, |t| (1.0 + d[0] * t * t, d[1] * t, d[2] * (1.0 - t)));
        let g = indicatrice_gradient(&m, &curve, &defo).unwrap();
        let value = phi(&m, &curve, &defo).unwrap();
        prop_assert!((g.contract(&curve, &defo) - value).abs() <= 1e-10 * (1.0 + value.abs()));
    }

    #[test]
    fn momenta_satisfy_constraint_and_round_trip(
        elliptic in any::<bool>(),
        c in coeffs(),
        a in -0.2..0.2f64,
        b in -0.4..0.4f64,
        slopes in prop::array::uniform2(-1.0..1.0f64),
    ) {
        let m = model(elliptic, c);
        let curve0 = wobbly(25, a, b, 0.0);
        let t = curve0.tangent();
        // give the curve a z consistent with the slopes: z' = x' zx + y' zy
        let zx: Vec<f64> = (0..curve0.len()).map(|i| slopes[0] + 0.1 * curve0.y[i]).collect();
        let zy: Vec<f64> = (0..curve0.len()).map(|i| slopes[1] - 0.2 * curve0.x[i]).collect();
        let mut z = vec![0.0; curve0.len()];
        for i in 1..z.len() {
            let rate = |k: usize| t.x[k] * zx[k] + t.y[k] * zy[k];
            z[i] = z[i - 1] + 0.5 * curve0.step * (rate(i - 1) + rate(i));
        }
        let curve = Curve::new(curve0.x.clone(), curve0.y.clone(), z, BoundaryMode::FixedEndpoints).unwrap();
        let ct = curve.tangent();
        // evaluate with the slopes matching the discrete tangent exactly
        let zy_fit: Vec<f64> = (0..curve.len()).map(|i| (ct.z[i] - ct.x[i] * zx[i]) / ct.y[i]).collect();
        let p = momenta_from_slopes(&m, &curve, &zx, &zy_fit).unwrap();
        let scale = 1.0 + p.px.iter().chain(&p.py).chain(&p.pz).fold(0.0f64, |s, v| s.max(v.abs()));
        for r in constraint_residual(&curve, &p).unwrap() {
            prop_assert!(r.abs() <= 1e-12 * scale, "constraint {r}");
        }
        for (rx, ry) in hj_residual_generic(&m, &curve, &p).unwrap() {
            prop_assert!(rx.abs() <= 1e-11 * scale && ry.abs() <= 1e-11 * scale, "round trip {rx} {ry}");
        }
    }

    #[test]
    fn reparameterization_round_trip(
        a in -0.2..0.2f64,
        b in -0.4..0.4f64,
        zc in -1.0..1.0f64,
        k in 0.05..0.3f64,
    ) {
        let curve = wobbly(129, a, b, zc);
        // t -> t + k t (1 - t) and its inverse
        let fwd = move |t: f64| t + k * t * (1.0 - t);
        let inv = move |s: f64| ((1.0 + k) - ((1.0 + k).powi(2) - 4.0 * k * s).max(0.0).sqrt()) / (2.0 * k);
        let back = reparameterize(&reparameterize(&curve, fwd).unwrap(), inv).unwrap();
        for i in 0..curve.len() {
            prop_assert!((back.x[i] - curve.x[i]).abs() < 1e-6);
            prop_assert!((back.y[i] - curve.y[i]).abs() < 1e-6);
            prop_assert!((back.z[i] - curve.z[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn reversed_sweep_flips_propagation_time(
        elliptic in any::<bool>(),
        c in coeffs(),
        w in 0.1..0.5f64,
        zc in -0.5..0.5f64,
    ) {
        let m = model(elliptic, c);
        let f = move |t: f64, s: f64| (s * (1.0 + w * t), t, zc * s + 0.3 * t * s);
        let fwd = ParamSurface::from_fn(17, 9, 1.0, f);
        let rev = ParamSurface::from_fn(17, 9, 1.0, move |t, s| f(1.0 - t, s));
        let a = propagation_time(&m, &fwd).unwrap();
        let b = propagation_time(&m, &rev).unwrap();
        prop_assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn crank_nicolson_preserves_norm(
        mean in prop::array::uniform2(-0.8..0.8f64),
        momentum in prop::array::uniform2(-0.5..0.5f64),
        duration in 0.05..0.3f64,
    ) {
        let slice = LatticeSlice::flat(2, 1.0, 0.0, PolynomialPotential::mass(1.0)).unwrap();
        let g = GaussianState::ground_state(slice)
            .unwrap()
            .displaced(mean.to_vec(), momentum.to_vec())
            .unwrap();
        let state = WaveFunctional::FullGrid(g.to_full_grid(ZGrid::new(32, 6.0).unwrap()).unwrap());
        let fol = Foliation::from_fn(2, 2, BoundaryMode::Periodic, 1.0, duration, 2.0, |t, a| (a, t)).unwrap();
        let opts = EvolveOptions { tol_step: None, ..EvolveOptions::default() };
        let (out, report) = evolve(&state, &fol, 10, &opts).unwrap();
        prop_assert!((out.norm() - state.norm()).abs() < 1e-10);
        prop_assert!(report.max_norm_drift() < 1e-10);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(
        phase in prop::array::uniform3(-2.0..2.0f64),
        width in 0.3..1.2f64,
    ) {
        let slice = LatticeSlice::flat(1, 1.0, 0.0, PolynomialPotential::mass(1.0)).unwrap();
        let grid = ZGrid::new(64, 8.0).unwrap();
        let a = FullGridState::from_fn(slice.clone(), grid, |z| {
            Complex64::from_polar((-z[0] * z[0] / (2.0 * width)).exp(), phase[0] * z[0])
        })
        .unwrap();
        let b = FullGridState::from_fn(slice, grid, |z| {
            Complex64::from_polar((-(z[0] - 0.3).powi(2)).exp(), phase[1] * z[0] + phase[2])
        })
        .unwrap();
        let ab = a.fidelity(&b).unwrap();
        let ba = b.fidelity(&a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&ab));
        prop_assert!((a.fidelity(&a).unwrap() - 1.0).abs() < 1e-12);
    }
}
