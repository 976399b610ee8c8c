use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};
use vardiff_core::numerics::OrderFit;

use crate::config::{ExperimentConfig, Suite};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Tolerance {
    AtMost { value: f64 },
    Within { min: f64, max: f64 },
}

impl Tolerance {
    pub fn admits(self, measured: f64) -> bool {
        match self {
            Tolerance::AtMost { value } => measured <= value,
            Tolerance::Within { min, max } => measured >= min && measured <= max,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: Tolerance,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, measured: f64, tolerance: Tolerance) -> Self {
        Self {
            name: name.to_string(),
            measured,
            pass: tolerance.admits(measured),
            tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseRecord {
    pub index: usize,
    pub case: String,
    pub config_digest: String,
    pub inputs_digest: String,
    pub inputs: BTreeMap<String, serde_json::Value>,
    pub values: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRecord {
    pub config_digest: String,
    pub quantity: String,
    pub spacings: Vec<f64>,
    pub errors: Vec<f64>,
    pub order: f64,
    pub std_error: f64,
    pub ci95: [f64; 2],
    pub check: Check,
}

impl ConvergenceRecord {
    pub fn new(digest: &str, quantity: &str, spacings: Vec<f64>, errors: Vec<f64>, fit: OrderFit, tol: Tolerance) -> Self {
        Self {
            config_digest: digest.to_string(),
            quantity: quantity.to_string(),
            spacings,
            errors,
            order: fit.order,
            std_error: fit.std_error,
            ci95: [fit.order - fit.ci95, fit.order + fit.ci95],
            check: Check::new("fitted order", fit.order, tol),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub suite: Suite,
    pub config_digest: String,
    pub config: ExperimentConfig,
    pub records: Vec<CaseRecord>,
    pub convergence: Vec<ConvergenceRecord>,
    pub pass: bool,
}

/// Extra output written next to the report.
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of the canonical JSON form of the configuration.
pub fn config_digest(cfg: &ExperimentConfig) -> String {
    sha256_hex(&serde_json::to_vec(cfg).expect("config serializes"))
}

/// Assembles a case record; the inputs digest covers the config digest and
/// the case inputs.
pub fn record(
    index: usize,
    case: String,
    digest: &str,
    inputs: BTreeMap<String, serde_json::Value>,
    values: BTreeMap<String, f64>,
    checks: Vec<Check>,
    files: Vec<String>,
) -> CaseRecord {
    let mut hashed = serde_json::to_vec(&inputs).expect("inputs serialize");
    hashed.extend_from_slice(digest.as_bytes());
    let pass = checks.iter().all(|c| c.pass);
    CaseRecord {
        index,
        case,
        config_digest: digest.to_string(),
        inputs_digest: sha256_hex(&hashed),
        inputs,
        values,
        checks,
        files,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_kinds() {
        assert!(Tolerance::AtMost { value: 1.0 }.admits(1.0));
        assert!(!Tolerance::AtMost { value: 1.0 }.admits(f64::NAN));
        assert!(Tolerance::Within { min: 1.5, max: 2.5 }.admits(2.0));
        assert!(!Tolerance::Within { min: 1.5, max: 2.5 }.admits(f64::NAN));
    }

    #[test]
    fn digest_is_hex_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
