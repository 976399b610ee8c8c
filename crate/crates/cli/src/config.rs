use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vardiff_core::curves::{Curve, ParamSurface};
use vardiff_core::eikonal::SolverOptions;
use vardiff_core::models::LagrangianModel;
use vardiff_core::presets::Preset;
use vardiff_core::quantum::Scheme;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    ActionCheck,
    EikonalVerify,
    HjVerify,
    QuantumEvolve,
    Convergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: Suite,
    /// Overrides the preset's model; required for inline geometry and
    /// quantum runs.
    #[serde(default)]
    pub model: Option<LagrangianModel>,
    #[serde(default)]
    pub geometry: Option<Geometry>,
    /// Grid sizes for the classical suites, alpha-step counts for
    /// quantum-evolve.
    pub resolutions: Vec<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub quantum: Option<QuantumSpec>,
    #[serde(default)]
    pub convergence: ConvergenceSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Geometry {
    Preset(Preset),
    /// Strip bounded by two sampled curves; side edges interpolate linearly.
    Strip { c0: Curve, c1: Curve },
    /// A sampled swept surface for action-check.
    Surface(ParamSurface),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub tj_gap: f64,
    pub momenta_relative: f64,
    pub hj_analytic: f64,
    pub hj_numeric: f64,
    pub constraint_numeric: f64,
    pub order_min: f64,
    pub order_max: f64,
    pub norm_drift: f64,
    pub infidelity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tj_gap: 1e-3,
            momenta_relative: 0.02,
            hj_analytic: 1e-12,
            hj_numeric: 1e-3,
            constraint_numeric: 5e-3,
            order_min: 1.5,
            order_max: 2.5,
            norm_drift: 1e-8,
            infidelity: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceQuantity {
    /// Finite-difference momenta against the closed-form momenta.
    #[default]
    Momenta,
    /// Propagation time of the preset sweep against its exact action.
    Action,
    /// Discrete eikonal against the exact action of the extremal.
    Eikonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSpec {
    pub quantity: ConvergenceQuantity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    #[default]
    FullGrid,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialState {
    Ground,
    Displaced { mean: Vec<f64>, momentum: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FoliationSpec {
    /// `x = alpha`, `y = tau`.
    Flat { duration: f64 },
    /// `x = alpha + b sin(pi alpha / A) cos(2 pi tau / (M dtau))`.
    Bulge { duration: f64, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumSpec {
    pub sites: usize,
    #[serde(default = "one")]
    pub tau_step: f64,
    #[serde(default = "default_points")]
    pub grid_points: usize,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "ground")]
    pub initial: InitialState,
    pub foliation: FoliationSpec,
    #[serde(default)]
    pub representation: Representation,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_tol_step")]
    pub tol_step: Option<f64>,
    /// Compare with exact Gaussian evolution (flat foliations, quadratic
    /// potentials).
    #[serde(default)]
    pub compare_exact: bool,
    #[serde(default = "yes")]
    pub snapshot: bool,
}

fn one() -> f64 {
    1.0
}
fn default_points() -> usize {
    128
}
fn default_half_width() -> f64 {
    8.0
}
fn ground() -> InitialState {
    InitialState::Ground
}
fn default_tol_step() -> Option<f64> {
    Some(1e-8)
}
fn yes() -> bool {
    true
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let message = e.inner().to_string();
            CliError::Config {
                key: offending_key(&e.path().to_string(), &message),
                message,
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, message: String| CliError::Config {
            key: key.to_string(),
            message,
        };
        if self.resolutions.is_empty() {
            return Err(bad("resolutions", "at least one resolution is required".into()));
        }
        if let Some(w) = self.resolutions.windows(2).find(|w| w[1] <= w[0]) {
            return Err(bad(
                "resolutions",
                format!("must be strictly increasing ({} then {})", w[0], w[1]),
            ));
        }
        match self.suite {
            Suite::QuantumEvolve => {
                let q = self
                    .quantum
                    .as_ref()
                    .ok_or_else(|| bad("quantum", "quantum-evolve needs a quantum block".into()))?;
                if self.model.is_none() {
                    return Err(bad("model", "quantum-evolve needs a model (its potential is used)".into()));
                }
                if q.sites == 0 {
                    return Err(bad("quantum.sites", "must be positive".into()));
                }
                if self.resolutions[0] == 0 {
                    return Err(bad("resolutions", "step counts must be positive".into()));
                }
            }
            _ => {
                let geometry = self
                    .geometry
                    .as_ref()
                    .ok_or_else(|| bad("geometry", format!("{:?} needs a geometry", self.suite)))?;
                if !matches!(geometry, Geometry::Preset(_)) && self.model.is_none() {
                    return Err(bad("model", "inline geometry needs an explicit model".into()));
                }
                if self.quantum.is_some() {
                    return Err(bad("quantum", "only quantum-evolve takes a quantum block".into()));
                }
                let min = if self.suite == Suite::ActionCheck { 5 } else { 17 };
                if self.resolutions[0] < min {
                    return Err(bad("resolutions", format!("smallest resolution must be at least {min}")));
                }
                if self.suite == Suite::Convergence && self.resolutions.len() < 2 {
                    return Err(bad("resolutions", "convergence needs at least two resolutions".into()));
                }
            }
        }
        Ok(())
    }

    pub fn model_for(&self, preset: Option<Preset>) -> LagrangianModel {
        match (&self.model, preset) {
            (Some(m), _) => m.clone(),
            (None, Some(p)) => p.model(),
            (None, None) => unreachable!("validated: inline geometry carries a model"),
        }
    }
}

/// Dotted path of the key a serde error refers to. For unknown or missing
/// fields the field name is appended to the path of its parent.
fn offending_key(path: &str, message: &str) -> String {
    let parent = if path == "." { "" } else { path };
    for marker in ["unknown field `", "missing field `"] {
        if let Some(start) = message.find(marker) {
            let rest = &message[start + marker.len()..];
            if let Some(end) = rest.find('`') {
                let field = &rest[..end];
                return if parent.is_empty() {
                    field.to_string()
                } else if parent.ends_with(field) {
                    parent.to_string()
                } else {
                    format!("{parent}.{field}")
                };
            }
        }
    }
    if parent.is_empty() {
        "<document>".to_string()
    } else {
        parent.to_string()
    }
}
