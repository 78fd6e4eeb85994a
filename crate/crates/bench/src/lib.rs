//! Experiment harness for the `lastiter` library.
//!
//! An [`ExperimentSpec`](spec::ExperimentSpec) JSON document names one
//! problem, a list of run-config deltas and the sweep axes. [`Plan`] expands
//! it into concrete runs, [`execute`] renders trajectories, bound reports and
//! a manifest in memory, and the `commands` module wraps this as the
//! `run`, `report`, `verify` and `replay` verbs.

pub mod commands;
pub mod execute;
pub mod manifest;
pub mod plan;
pub mod report;
pub mod spec;

pub use execute::{execute, Execution, Failure, RunOutcome};
pub use manifest::Manifest;
pub use plan::{Plan, PlannedRun};
pub use spec::{ExperimentSpec, ProblemSpec, Verifier};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchError {
    /// Spec or manifest validation failure.
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
    /// A run or evaluator could not complete.
    #[error("execution failed: {0}")]
    Execution(String),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        commands::EXIT_INVALID
    }
}
