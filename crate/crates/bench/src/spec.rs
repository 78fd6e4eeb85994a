//! Experiment specification documents.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use lastiter::analysis::{BoundKind, Lemma3Mode};
use lastiter::{make_lipschitz_suite, make_quadratic_suite, Ordering, Problem};

use crate::BenchError;

pub const SPEC_VERSION: u32 = 1;

/// A complete experiment: one problem, a list of run deltas, sweep axes and
/// the verifiers to apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub version: u32,
    pub name: String,
    pub problem: ProblemSpec,
    /// Run-config fields shared by every run.
    #[serde(default)]
    pub base: Map<String, Value>,
    /// Run-config deltas over `base`. Each may carry a `label` and its own
    /// `verifiers` list.
    pub runs: Vec<Map<String, Value>>,
    pub sweeps: Sweeps,
    #[serde(default)]
    pub verifiers: Vec<Verifier>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma3: Option<Lemma3Spec>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default = "one")]
    pub jobs: usize,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    Quadratic {
        d: usize,
        t: usize,
        sigma_sq: f64,
        condition: f64,
        seed: u64,
    },
    Lipschitz {
        d: usize,
        t: usize,
        g: f64,
        seed: u64,
    },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Problem, BenchError> {
        let p = match *self {
            ProblemSpec::Quadratic { d, t, sigma_sq, condition, seed } => {
                make_quadratic_suite(d, t, sigma_sq, condition, seed)
            }
            ProblemSpec::Lipschitz { d, t, g, seed } => make_lipschitz_suite(d, t, g, seed),
        };
        p.map_err(|e| BenchError::Invalid(format!("problem: {e}")))
    }

    pub fn seed(&self) -> u64 {
        match *self {
            ProblemSpec::Quadratic { seed, .. } | ProblemSpec::Lipschitz { seed, .. } => seed,
        }
    }
}

/// Sweep axes. `epochs` is required; the others are optional, but an axis
/// that is present must be nonempty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweeps {
    pub epochs: Vec<usize>,
    /// Constant step sizes; overrides the run's step schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<Vec<f64>>,
    /// Constant inexactness budgets; overrides the run's eps schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orderings: Option<Vec<Ordering>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verifier {
    Thm1,
    Thm2,
    Thm3,
    Thm4,
    CorAvg,
    Lemma1,
    Lemma2,
    Lemma3,
    Lemma4,
    Lemma5,
    Lemma6,
}

impl Verifier {
    pub fn name(self) -> &'static str {
        match self.bound_kind() {
            Some(kind) => kind.name(),
            None => "lemma3",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        serde_json::from_value(Value::String(name.to_string())).ok()
    }

    /// `None` for the problem-level `lemma3` check.
    pub fn bound_kind(self) -> Option<BoundKind> {
        Some(match self {
            Verifier::Thm1 => BoundKind::Thm1,
            Verifier::Thm2 => BoundKind::Thm2,
            Verifier::Thm3 => BoundKind::Thm3,
            Verifier::Thm4 => BoundKind::Thm4,
            Verifier::CorAvg => BoundKind::CorAvg,
            Verifier::Lemma1 => BoundKind::Lemma1,
            Verifier::Lemma2 => BoundKind::Lemma2,
            Verifier::Lemma3 => return None,
            Verifier::Lemma4 => BoundKind::Lemma4,
            Verifier::Lemma5 => BoundKind::Lemma5,
            Verifier::Lemma6 => BoundKind::Lemma6,
        })
    }

    pub fn is_theorem(self) -> bool {
        matches!(
            self,
            Verifier::Thm1 | Verifier::Thm2 | Verifier::Thm3 | Verifier::Thm4 | Verifier::CorAvg
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma3Spec {
    pub mode: Lemma3Mode,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> usize {
    100_000
}

impl Default for Lemma3Spec {
    fn default() -> Self {
        Self {
            mode: Lemma3Mode::Exhaustive,
            samples: default_samples(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// Relative paths resolve against the output root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// Trajectory CSVs and their JSON envelopes.
    #[serde(default = "yes")]
    pub trajectories: bool,
    /// Bound-report CSVs.
    #[serde(default = "yes")]
    pub reports: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            dir: None,
            trajectories: true,
            reports: true,
        }
    }
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let spec: Self =
            serde_json::from_str(text).map_err(|e| BenchError::Invalid(format!("spec: {e}")))?;
        spec.check_shape()?;
        Ok(spec)
    }

    /// Structural checks that need no problem instance.
    pub fn check_shape(&self) -> Result<(), BenchError> {
        let invalid = |m: String| Err(BenchError::Invalid(m));
        if self.version != SPEC_VERSION {
            return invalid(format!(
                "unsupported spec version {} (expected {SPEC_VERSION})",
                self.version
            ));
        }
        if !is_safe_name(&self.name) {
            return invalid(format!(
                "name {:?} must be nonempty and use only [A-Za-z0-9_-]",
                self.name
            ));
        }
        if self.runs.is_empty() {
            return invalid("runs: at least one run is required".into());
        }
        if self.jobs == 0 {
            return invalid("jobs must be at least 1".into());
        }
        let s = &self.sweeps;
        if s.epochs.is_empty() {
            return invalid("sweeps.epochs: empty sweep axis".into());
        }
        if s.epochs.contains(&0) {
            return invalid("sweeps.epochs: K must be at least 1".into());
        }
        for (axis, empty) in [
            ("step", s.step.as_ref().is_some_and(Vec::is_empty)),
            ("eps", s.eps.as_ref().is_some_and(Vec::is_empty)),
            ("orderings", s.orderings.as_ref().is_some_and(Vec::is_empty)),
            ("seeds", s.seeds.as_ref().is_some_and(Vec::is_empty)),
        ] {
            if empty {
                return invalid(format!("sweeps.{axis}: empty sweep axis"));
            }
        }
        if self.base.contains_key("epochs") || self.runs.iter().any(|r| r.contains_key("epochs")) {
            return invalid("epochs come from sweeps.epochs, not from run deltas".into());
        }
        for key in ["label", "verifiers"] {
            if self.base.contains_key(key) {
                return invalid(format!("base may not set {key:?}"));
            }
        }
        Ok(())
    }
}

pub(crate) fn is_safe_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}
