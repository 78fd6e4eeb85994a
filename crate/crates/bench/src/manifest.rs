use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use lastiter::analysis::Lemma3Outcome;
use lastiter::Config;

use crate::plan::PlannedRun;
use crate::spec::{Lemma3Spec, Outputs, ProblemSpec, Verifier};
use crate::BenchError;

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PROBLEM_FILE: &str = "problem.json";
pub const LEMMA3_FILE: &str = "lemma3.csv";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Record of a completed experiment. Holds the full spec and every resolved
/// run config, so the runs can be rebuilt without the spec file. Carries no
/// timestamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub library_version: String,
    pub name: String,
    pub spec_sha256: String,
    pub spec: Value,
    pub problem: ProblemSpec,
    pub problem_file: String,
    /// Every seed used: problem, orderings and the Monte-Carlo check.
    pub seeds: Vec<u64>,
    pub lemma3: Option<Lemma3Spec>,
    pub lemma3_result: Option<Lemma3Outcome<f64>>,
    pub outputs: Outputs,
    pub jobs: usize,
    pub runs: Vec<ManifestRun>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRun {
    pub id: String,
    pub group: String,
    pub label: String,
    pub verifiers: Vec<Verifier>,
    pub config: Config,
    /// Relative path of the trajectory CSV, when written.
    pub trajectory: Option<String>,
    /// Verifier name to relative report path.
    pub reports: BTreeMap<String, String>,
    pub final_gap: Option<f64>,
    pub passed: bool,
}

impl ManifestRun {
    pub fn planned(&self) -> PlannedRun {
        PlannedRun {
            id: self.id.clone(),
            group: self.group.clone(),
            label: self.label.clone(),
            verifiers: self.verifiers.clone(),
            config: self.config.clone(),
        }
    }
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| BenchError::Invalid(format!("{}: {e}", path.display())))?;
        if m.version != MANIFEST_VERSION {
            return Err(BenchError::Invalid(format!(
                "unsupported manifest version {} (expected {MANIFEST_VERSION})",
                m.version
            )));
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}
