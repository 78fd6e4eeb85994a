use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by problem construction, oracles, solvers and evaluators.
///
/// Numeric payloads are carried as `f64` so the error type does not depend on
/// the scalar parameter of the routine that raised it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate construction: {0}")]
    DegenerateConstruction(String),

    #[error("component {index} ({kind}) is not smooth")]
    NonSmoothComponent { index: usize, kind: &'static str },

    #[error("{kind} components have no closed-form proximal operator; use the inexact solver")]
    NoClosedForm { kind: &'static str },

    #[error(
        "inexact prox budget {budget:e} unreachable after {iterations} inner iterations \
         (best certified {best:e})"
    )]
    BudgetUnreachable {
        budget: f64,
        best: f64,
        iterations: usize,
    },

    #[error("minimizer x* is unknown for this problem")]
    UnknownMinimizer,

    #[error("optimal value f* is unknown for this problem")]
    UnknownOptimalValue,

    #[error("{0} is unknown for this problem")]
    UnknownConstant(&'static str),

    #[error(
        "step size {step:e} at epoch {epoch} exceeds the smooth step cap 1/(sqrt(beta)*T*L) = {cap:e} \
         (hypothesis of the per-epoch descent lemma, lemma1)"
    )]
    StepCapViolated { step: f64, cap: f64, epoch: usize },

    #[error("parameters alpha = {alpha}, beta = {beta} violate 1/alpha + 1/beta <= 1/2")]
    InvalidTradeoff { alpha: f64, beta: f64 },

    #[error("proximal step failed at epoch {epoch}, slot {slot}: {source}")]
    ProxFailed {
        epoch: usize,
        slot: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("factorial cap exceeded: exhaustive enumeration supports T <= {cap}, got T = {t}")]
    FactorialCap { t: usize, cap: usize },

    #[error("nonpositive gap {gap:e} at K = {k}; truncate the sweep before fitting")]
    NonPositiveGap { k: usize, gap: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("serialization: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
