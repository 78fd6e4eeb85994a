//! Last-iterate analysis toolkit for incremental gradient and incremental
//! proximal methods on finite-sum convex problems.
//!
//! The crate provides problem generators with exactly known constants
//! (`x*`, `f*`, `σ*²`, `L`, `G`), the epoch-structured solvers, proximal
//! operators with an inexactness certificate, the weight sequences of the
//! last-iterate analysis, and evaluators for every bound and per-epoch
//! inequality of that analysis.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! `f64` aliases below cover the common case.
//!
//! ```
//! use lastiter::{make_quadratic_suite, run, Method, RunConfig};
//! use lastiter::analysis::{bound_report, BoundKind};
//!
//! let problem = make_quadratic_suite::<f64>(5, 4, 0.5, 3.0, 7).unwrap();
//! let config = RunConfig::new(Method::Igd, 64).with_x0(vec![1.0; 5]);
//! let trajectory = run(&problem, &config).unwrap();
//! let report = bound_report(BoundKind::Thm1, &problem, &trajectory, &config).unwrap();
//! assert!(report.all_ok());
//! ```

pub mod analysis;
pub mod error;
pub mod linalg;
pub mod problems;
pub mod prox;
pub mod rng;
pub mod scalar;
pub mod schedules;
pub mod solvers;

pub use error::{Error, Result};
pub use problems::{
    make_lipschitz_suite, make_quadratic_suite, Component, ComponentKind, FiniteSumProblem,
    ProblemMeta, Provenance,
};
pub use prox::{prox_exact, prox_inexact, ProxResult};
pub use scalar::Scalar;
pub use schedules::{build_weights, Regime, WeightSchedule};
pub use solvers::{
    make_ordering, run, run_igd, run_ip, EpsSchedule, Method, Ordering, RunConfig, StepSchedule,
    Trajectory,
};

/// Version of this library, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Problem = FiniteSumProblem<f64>;
pub type Config = RunConfig<f64>;
pub type Run = Trajectory<f64>;
pub type Weights = WeightSchedule<f64>;
pub type Report = analysis::BoundReport<f64>;
pub type Matrix = linalg::Matrix<f64>;
