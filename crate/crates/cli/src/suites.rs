use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde_json::{json, Value};
use vardiff_core::action::{action_integral, propagation_time};
use vardiff_core::curves::{Foliation, ParamSurface};
use vardiff_core::eikonal::{eikonal_value, hj_residual_generic, momenta_from_slopes, solve_extremal, SideData, StripRegion};
use vardiff_core::models::ModelKind;
use vardiff_core::numerics::{fit_order, BoundaryMode, OrderFit};
use vardiff_core::presets::Preset;
use vardiff_core::quantum::{
    evolve, gaussian_free_evolution, write_snapshot, EvolveOptions, GaussianState, LatticeSlice, WaveFunctional, ZGrid,
};
use vardiff_core::verify::{compare_momenta, compare_with_reference, MomentaComparison};

use crate::config::{
    ConvergenceQuantity, ExperimentConfig, FoliationSpec, Geometry, InitialState, QuantumSpec, Representation, Suite,
};
use crate::error::CliError;
use crate::report::{record, Artifact, CaseRecord, Check, ConvergenceRecord, Tolerance};

pub struct SuiteOutput {
    pub records: Vec<CaseRecord>,
    pub convergence: Vec<ConvergenceRecord>,
    pub artifacts: Vec<Artifact>,
}

struct CaseOutput {
    record: CaseRecord,
    artifacts: Vec<Artifact>,
}

type Values = BTreeMap<String, f64>;
type Inputs = BTreeMap<String, Value>;

fn at_most(value: f64) -> Tolerance {
    Tolerance::AtMost { value }
}

fn preset_of(cfg: &ExperimentConfig) -> Option<Preset> {
    match cfg.geometry {
        Some(Geometry::Preset(p)) => Some(p),
        _ => None,
    }
}

/// Closed-form references only apply when the model is the preset's own.
fn analytic_preset(cfg: &ExperimentConfig) -> Option<Preset> {
    preset_of(cfg).filter(|p| cfg.model.as_ref().is_none_or(|m| *m == p.model()))
}

fn strip_region(cfg: &ExperimentConfig, grid: usize) -> Result<StripRegion, CliError> {
    match &cfg.geometry {
        Some(Geometry::Preset(p)) => p.region(grid.div_ceil(2)).map_err(CliError::case(format!("{p} region"))),
        Some(Geometry::Strip { c0, c1 }) => {
            StripRegion::new(c0.clone(), c1.clone(), SideData::Linear).map_err(CliError::case("inline strip"))
        }
        _ => Err(CliError::Config {
            key: "geometry".into(),
            message: "this suite needs a preset or an inline strip".into(),
        }),
    }
}

fn run_cases(
    cfg: &ExperimentConfig,
    f: impl Fn(usize, usize) -> Result<CaseOutput, CliError> + Sync,
) -> Result<Vec<CaseOutput>, CliError> {
    cfg.resolutions
        .par_iter()
        .enumerate()
        .map(|(index, &res)| f(index, res))
        .collect()
}

pub fn run_suite(cfg: &ExperimentConfig, digest: &str) -> Result<SuiteOutput, CliError> {
    let (cases, convergence) = match cfg.suite {
        Suite::ActionCheck => (action_check(cfg, digest)?, Vec::new()),
        Suite::EikonalVerify => (eikonal_verify(cfg, digest)?, Vec::new()),
        Suite::HjVerify => (hj_verify(cfg, digest)?, Vec::new()),
        Suite::QuantumEvolve => (quantum_evolve(cfg, digest)?, Vec::new()),
        Suite::Convergence => convergence(cfg, digest)?,
    };
    let mut records = Vec::new();
    let mut artifacts = Vec::new();
    for c in cases {
        records.push(c.record);
        artifacts.extend(c.artifacts);
    }
    Ok(SuiteOutput {
        records,
        convergence,
        artifacts,
    })
}

fn sweep_surface(cfg: &ExperimentConfig, n: usize) -> Result<(ParamSurface, String), CliError> {
    match &cfg.geometry {
        Some(Geometry::Preset(p)) => Ok((p.surface(n), format!("{p}/n{n}"))),
        Some(Geometry::Surface(s)) => Ok((s.clone(), format!("surface/{}x{}", s.n_tau, s.n_alpha))),
        Some(Geometry::Strip { c0, c1 }) => {
            if c0.len() != c1.len() {
                return Err(CliError::Config {
                    key: "geometry.strip".into(),
                    message: "C0 and C1 need the same sample count".into(),
                });
            }
            let m = c0.len();
            let h = 1.0 / (n - 1) as f64;
            let mut s = ParamSurface {
                n_tau: m,
                n_alpha: n,
                mode: BoundaryMode::FixedEndpoints,
                tau_step: c0.step,
                alpha_extent: 1.0,
                y_winding: 0.0,
                x: Vec::with_capacity(m * n),
                y: Vec::with_capacity(m * n),
                z: Vec::with_capacity(m * n),
            };
            for j in 0..n {
                let a = j as f64 * h;
                for i in 0..m {
                    s.x.push((1.0 - a) * c0.x[i] + a * c1.x[i]);
                    s.y.push((1.0 - a) * c0.y[i] + a * c1.y[i]);
                    s.z.push((1.0 - a) * c0.z[i] + a * c1.z[i]);
                }
            }
            Ok((s, format!("strip-sweep/n{n}")))
        }
        None => unreachable!("validated"),
    }
}

fn action_check(cfg: &ExperimentConfig, digest: &str) -> Result<Vec<CaseOutput>, CliError> {
    let preset = preset_of(cfg);
    let model = cfg.model_for(preset);
    let exact = analytic_preset(cfg).map(|p| p.exact_action());
    let inline_surface = matches!(cfg.geometry, Some(Geometry::Surface(_)));
    run_cases(cfg, |index, n| {
        let (surface, name) = sweep_surface(cfg, n)?;
        let t = propagation_time(&model, &surface).map_err(CliError::case(&name))?;
        let j = action_integral(&model, &surface).map_err(CliError::case(&name))?;
        let mut values = Values::new();
        values.insert("T".into(), t);
        values.insert("J".into(), j);
        values.insert("tj_gap".into(), (t - j).abs());
        if let Some(e) = exact {
            values.insert("J_exact".into(), e);
            values.insert("J_error".into(), (j - e).abs());
        }
        let mut inputs = Inputs::new();
        inputs.insert("resolution".into(), json!(if inline_surface { surface.n_tau } else { n }));
        inputs.insert("model".into(), json!(model));
        let checks = vec![Check::new("|T - J|", (t - j).abs(), at_most(cfg.tolerances.tj_gap))];
        Ok(CaseOutput {
            record: record(index, name, digest, inputs, values, checks, Vec::new()),
            artifacts: Vec::new(),
        })
    })
}

fn comparison(cfg: &ExperimentConfig, grid: usize) -> Result<MomentaComparison, CliError> {
    let ctx = format!("grid {grid}");
    if let Some(p) = analytic_preset(cfg) {
        return compare_momenta(p, grid, &cfg.solver).map_err(CliError::case(ctx));
    }
    // no closed form: compare with the momenta of the extremal's boundary slopes
    let model = cfg.model_for(preset_of(cfg));
    let region = strip_region(cfg, grid)?;
    let ex = solve_extremal(&model, &region, (grid, grid), &cfg.solver).map_err(CliError::case(&ctx))?;
    let reference = ex.momenta(&model).map_err(CliError::case(&ctx))?;
    compare_with_reference(&model, &region, grid, reference, &cfg.solver).map_err(CliError::case(ctx))
}

fn eikonal_verify(cfg: &ExperimentConfig, digest: &str) -> Result<Vec<CaseOutput>, CliError> {
    let preset = analytic_preset(cfg);
    let model = cfg.model_for(preset_of(cfg));
    let reference = if preset.is_some() { "closed-form" } else { "extremal-slopes" };
    run_cases(cfg, |index, grid| {
        let cmp = comparison(cfg, grid)?;
        let name = format!("eikonal-verify/grid{grid}");
        let file = format!("eikonal-verify_grid{grid}.csv");
        let mut values = Values::new();
        values.insert("max_relative_error".into(), cmp.max_relative_error());
        values.insert("max_constraint_fd".into(), cmp.max_constraint_fd());
        values.insert("max_constraint_reference".into(), cmp.max_constraint_analytic());
        values.insert("max_hj_fd".into(), cmp.max_hj_fd());
        let region = strip_region(cfg, grid)?;
        let s = eikonal_value(&model, &region, (grid, grid), &cfg.solver).map_err(CliError::case(&name))?;
        values.insert("eikonal".into(), s);
        if let Some(p) = preset {
            values.insert("eikonal_exact".into(), p.exact_action());
        }
        let mut inputs = Inputs::new();
        inputs.insert("grid".into(), json!(grid));
        inputs.insert("curve_samples".into(), json!(cmp.curve_samples));
        inputs.insert("reference".into(), json!(reference));
        let checks = vec![
            Check::new("max relative momentum error", cmp.max_relative_error(), at_most(cfg.tolerances.momenta_relative)),
            Check::new("max constraint residual (fd)", cmp.max_constraint_fd(), at_most(cfg.tolerances.constraint_numeric)),
        ];
        Ok(CaseOutput {
            record: record(index, name, digest, inputs, values, checks, vec![file.clone()]),
            artifacts: vec![Artifact {
                name: file,
                bytes: cmp.to_csv().into_bytes(),
            }],
        })
    })
}

fn hj_verify(cfg: &ExperimentConfig, digest: &str) -> Result<Vec<CaseOutput>, CliError> {
    let preset = analytic_preset(cfg);
    let model = cfg.model_for(preset_of(cfg));
    run_cases(cfg, |index, grid| {
        let name = format!("hj-verify/grid{grid}");
        let cmp = comparison(cfg, grid)?;
        let mut values = Values::new();
        let mut checks = Vec::new();
        if preset.is_some() {
            values.insert("max_hj_analytic".into(), cmp.max_hj_analytic());
            checks.push(Check::new(
                "max residual, closed-form momenta",
                cmp.max_hj_analytic(),
                at_most(cfg.tolerances.hj_analytic),
            ));
        }
        values.insert("max_hj_fd".into(), cmp.max_hj_fd());
        checks.push(Check::new(
            "max residual, finite-difference momenta",
            cmp.max_hj_fd(),
            at_most(cfg.tolerances.hj_numeric),
        ));
        // slopes -> momenta -> slopes through the generic elimination
        let region = strip_region(cfg, grid)?;
        let ex = solve_extremal(&model, &region, (grid, grid), &cfg.solver).map_err(CliError::case(&name))?;
        let (zx, zy): (Vec<f64>, Vec<f64>) = ex.boundary_slopes.iter().copied().unzip();
        let m = momenta_from_slopes(&model, &region.c1, &zx, &zy).map_err(CliError::case(&name))?;
        let rt = hj_residual_generic(&model, &region.c1, &m)
            .map_err(CliError::case(&name))?
            .into_iter()
            .fold(0.0, |a: f64, (rx, ry)| a.max(rx.abs()).max(ry.abs()));
        values.insert("generic_round_trip".into(), rt);
        checks.push(Check::new("generic elimination round trip", rt, at_most(cfg.tolerances.hj_analytic)));
        let file = format!("hj-verify_grid{grid}.csv");
        let mut inputs = Inputs::new();
        inputs.insert("grid".into(), json!(grid));
        inputs.insert("curve_samples".into(), json!(cmp.curve_samples));
        Ok(CaseOutput {
            record: record(index, name, digest, inputs, values, checks, vec![file.clone()]),
            artifacts: vec![Artifact {
                name: file,
                bytes: cmp.to_csv().into_bytes(),
            }],
        })
    })
}

fn convergence(cfg: &ExperimentConfig, digest: &str) -> Result<(Vec<CaseOutput>, Vec<ConvergenceRecord>), CliError> {
    let preset = analytic_preset(cfg).ok_or_else(|| CliError::Config {
        key: "geometry".into(),
        message: "convergence needs a preset with its own model (closed-form reference)".into(),
    })?;
    let quantity = cfg.convergence.quantity;
    let cases = run_cases(cfg, |index, n| {
        let (name, error, spacing) = match quantity {
            ConvergenceQuantity::Momenta => {
                let cmp = compare_momenta(preset, n, &cfg.solver).map_err(CliError::case(format!("grid {n}")))?;
                (format!("momenta/grid{n}"), cmp.max_relative_error(), 1.0 / (n - 1) as f64)
            }
            ConvergenceQuantity::Action => {
                let s = preset.surface(n);
                let t = propagation_time(&preset.model(), &s).map_err(CliError::case(format!("n {n}")))?;
                (format!("action/n{n}"), (t - preset.exact_action()).abs(), 1.0 / (n - 1) as f64)
            }
            ConvergenceQuantity::Eikonal => {
                let region = preset.region(n.div_ceil(2)).map_err(CliError::case(format!("grid {n}")))?;
                let s = eikonal_value(&preset.model(), &region, (n, n), &cfg.solver)
                    .map_err(CliError::case(format!("grid {n}")))?;
                (format!("eikonal/grid{n}"), (s - preset.exact_action()).abs(), 1.0 / (n - 1) as f64)
            }
        };
        let mut values = Values::new();
        values.insert("error".into(), error);
        values.insert("spacing".into(), spacing);
        let mut inputs = Inputs::new();
        inputs.insert("resolution".into(), json!(n));
        inputs.insert("quantity".into(), json!(quantity));
        Ok(CaseOutput {
            record: record(index, name, digest, inputs, values, Vec::new(), Vec::new()),
            artifacts: Vec::new(),
        })
    })?;
    let spacings: Vec<f64> = cases.iter().map(|c| c.record.values["spacing"]).collect();
    let errors: Vec<f64> = cases.iter().map(|c| c.record.values["error"]).collect();
    let tol = Tolerance::Within {
        min: cfg.tolerances.order_min,
        max: cfg.tolerances.order_max,
    };
    let fit = if errors.iter().all(|e| *e > 0.0) {
        fit_order(&spacings, &errors)
    } else {
        // an exact reproduction has no measurable order
        OrderFit {
            order: f64::INFINITY,
            intercept: f64::NEG_INFINITY,
            std_error: 0.0,
            ci95: 0.0,
        }
    };
    let label = format!("{quantity:?}").to_lowercase();
    let conv = ConvergenceRecord::new(digest, &label, spacings, errors, fit, tol);
    Ok((cases, vec![conv]))
}

/// Periodic foliation of the lattice strip; the flag tells whether it is flat.
fn foliation(q: &QuantumSpec) -> Result<(Foliation, bool), CliError> {
    let m = q.sites;
    let period = m as f64 * q.tau_step;
    let build = |duration: f64, f: &dyn Fn(f64, f64) -> (f64, f64)| {
        Foliation::from_fn(m, 33, BoundaryMode::Periodic, q.tau_step, duration, period, f)
            .map_err(CliError::case("foliation"))
    };
    match q.foliation {
        FoliationSpec::Flat { duration } => Ok((build(duration, &|t, a| (a, t))?, true)),
        FoliationSpec::Bulge { duration, amplitude } => {
            let f = |t: f64, a: f64| (a + amplitude * (PI * a / duration).sin() * (2.0 * PI * t / period).cos(), t);
            Ok((build(duration, &f)?, false))
        }
    }
}

fn quantum_evolve(cfg: &ExperimentConfig, digest: &str) -> Result<Vec<CaseOutput>, CliError> {
    let q = cfg.quantum.as_ref().expect("validated");
    let model = cfg.model.as_ref().expect("validated");
    if model.kind != ModelKind::ScalarHyperbolic {
        return Err(CliError::Config {
            key: "model.kind".into(),
            message: "quantum evolution needs the scalar-hyperbolic model".into(),
        });
    }
    let (fol, flat) = foliation(q)?;
    let slice = LatticeSlice::flat(q.sites, q.tau_step, 0.0, model.potential.clone()).map_err(CliError::case("slice"))?;
    let initial = {
        let g = GaussianState::ground_state(slice).map_err(CliError::case("initial state"))?;
        match &q.initial {
            InitialState::Ground => g,
            InitialState::Displaced { mean, momentum } => g
                .displaced(mean.clone(), momentum.clone())
                .map_err(CliError::case("initial state"))?,
        }
    };
    let grid = ZGrid::new(q.grid_points, q.half_width).map_err(CliError::case("grid"))?;
    let start = match q.representation {
        Representation::FullGrid => {
            WaveFunctional::FullGrid(initial.to_full_grid(grid).map_err(CliError::case("initial state"))?)
        }
        Representation::Gaussian => WaveFunctional::Gaussian(initial.clone()),
    };
    let opts = EvolveOptions {
        scheme: q.scheme,
        tol_step: q.tol_step,
        ..EvolveOptions::default()
    };
    let duration = match q.foliation {
        FoliationSpec::Flat { duration } | FoliationSpec::Bulge { duration, .. } => duration,
    };
    run_cases(cfg, |index, steps| {
        let name = format!("quantum-evolve/steps{steps}");
        let (out, rep) = evolve(&start, &fol, steps, &opts).map_err(CliError::case(&name))?;
        let mut values = Values::new();
        values.insert("final_norm".into(), out.norm());
        values.insert("max_norm_drift".into(), rep.max_norm_drift());
        values.insert("max_energy_drift".into(), rep.max_energy_drift());
        values.insert("max_condition".into(), rep.condition.iter().fold(0.0, |m: f64, v| m.max(*v)));
        if !rep.local_error.is_empty() {
            values.insert("max_local_error".into(), rep.local_error.iter().fold(0.0, |m: f64, v| m.max(*v)));
        }
        let mut checks = Vec::new();
        if flat {
            checks.push(Check::new("max norm drift", rep.max_norm_drift(), at_most(cfg.tolerances.norm_drift)));
        }
        if q.compare_exact {
            if !flat {
                return Err(CliError::Config {
                    key: "quantum.compare_exact".into(),
                    message: "exact Gaussian evolution needs a flat foliation".into(),
                });
            }
            let exact = gaussian_free_evolution(&initial, &fol, duration).map_err(CliError::case(&name))?;
            let loss = 1.0 - out.fidelity(&WaveFunctional::Gaussian(exact)).map_err(CliError::case(&name))?;
            values.insert("infidelity_vs_exact".into(), loss);
            checks.push(Check::new("infidelity vs exact", loss, at_most(cfg.tolerances.infidelity)));
        }
        let mut files = vec![format!("quantum_steps{steps}_evolution.json")];
        let mut artifacts = vec![Artifact {
            name: files[0].clone(),
            bytes: serde_json::to_vec_pretty(&rep).expect("report serializes"),
        }];
        if q.snapshot {
            if let WaveFunctional::FullGrid(state) = &out {
                let file = format!("quantum_steps{steps}.state");
                let mut bytes = Vec::new();
                write_snapshot(&mut bytes, state).map_err(CliError::case(&name))?;
                files.push(file.clone());
                artifacts.push(Artifact { name: file, bytes });
            }
        }
        let mut inputs = Inputs::new();
        inputs.insert("steps".into(), json!(steps));
        inputs.insert("quantum".into(), json!(q));
        Ok(CaseOutput {
            record: record(index, name, digest, inputs, values, checks, files),
            artifacts,
        })
    })
}
