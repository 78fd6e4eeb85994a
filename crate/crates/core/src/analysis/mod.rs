//! Bound evaluators, per-epoch lemma verifiers, rate fitting and the
//! forgetting metric.

mod bounds;
mod lemmas;
mod rate;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use bounds::{
    bound_cor_avg, bound_thm1, bound_thm3, bound_thm3_general, bound_thm4, thm4_error_terms,
    SmoothConstants,
};
pub use lemmas::{
    lemma1, lemma2, lemma4, lemma5, lemma6, lemma3_exhaustive, lemma3_monte_carlo,
    shuffle_variance_sum, verify_lemma3, Lemma3Mode, Lemma3Outcome, Reference,
    LEMMA3_EXHAUSTIVE_CAP,
};
pub use rate::{fit_rate, fit_rate_filtered, RateFit};

use crate::error::{Error, Result};
use crate::problems::FiniteSumProblem;
use crate::scalar::Scalar;
use crate::schedules::{build_weights, Regime};
use crate::solvers::{RunConfig, Trajectory};

/// Floating-point slack applied to every proven inequality.
pub const DEFAULT_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Thm1,
    Thm2,
    Thm3,
    Thm4,
    CorAvg,
    Lemma1,
    Lemma2,
    Lemma4,
    Lemma5,
    Lemma6,
}

impl BoundKind {
    pub const ALL: [BoundKind; 10] = [
        BoundKind::Thm1,
        BoundKind::Thm2,
        BoundKind::Thm3,
        BoundKind::Thm4,
        BoundKind::CorAvg,
        BoundKind::Lemma1,
        BoundKind::Lemma2,
        BoundKind::Lemma4,
        BoundKind::Lemma5,
        BoundKind::Lemma6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Thm1 => "thm1",
            BoundKind::Thm2 => "thm2",
            BoundKind::Thm3 => "thm3",
            BoundKind::Thm4 => "thm4",
            BoundKind::CorAvg => "cor-avg",
            BoundKind::Lemma1 => "lemma1",
            BoundKind::Lemma2 => "lemma2",
            BoundKind::Lemma4 => "lemma4",
            BoundKind::Lemma5 => "lemma5",
            BoundKind::Lemma6 => "lemma6",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// `lhs ≤ rhs·(1 + slack) + slack`, with `|rhs|` in place of `rhs` so that
/// negative right-hand sides are not tightened.
pub fn within<T: Scalar>(lhs: T, rhs: T, slack: T) -> bool {
    lhs <= rhs + slack * (rhs.abs() + T::one())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BoundRow<T> {
    pub k: usize,
    pub gap: T,
    pub rhs: T,
    pub ok: bool,
}

/// Measured left-hand sides against a bound, one row per epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BoundReport<T> {
    pub kind: BoundKind,
    pub rows: Vec<BoundRow<T>>,
    pub params: BTreeMap<String, f64>,
    pub slack: T,
}

impl<T: Scalar> BoundReport<T> {
    pub fn new(kind: BoundKind) -> Self {
        Self {
            kind,
            rows: Vec::new(),
            params: BTreeMap::new(),
            slack: T::of(DEFAULT_SLACK),
        }
    }

    pub fn param(mut self, name: &str, value: T) -> Self {
        self.params.insert(name.to_owned(), value.as_f64());
        self
    }

    pub fn push(&mut self, k: usize, gap: T, rhs: T) {
        let ok = within(gap, rhs, self.slack);
        self.rows.push(BoundRow { k, gap, rhs, ok });
    }

    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.ok)
    }

    pub fn first_failure(&self) -> Option<&BoundRow<T>> {
        self.rows.iter().find(|r| !r.ok)
    }

    /// Smallest `rhs − gap` over all rows.
    pub fn min_margin(&self) -> Option<T> {
        self.rows.iter().map(|r| r.rhs - r.gap).reduce(T::min)
    }

    /// Largest `rhs − gap` over all rows.
    pub fn max_margin(&self) -> Option<T> {
        self.rows.iter().map(|r| r.rhs - r.gap).reduce(T::max)
    }

    /// CSV with columns `k, gap, rhs, ok`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.rows {
            out.serialize(row)?;
        }
        out.flush().map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Serialization(e.to_string()))
    }
}

fn constant_step<T: Scalar>(trajectory: &Trajectory<T>) -> Result<T> {
    let eta = trajectory.steps[0];
    if trajectory.steps.iter().any(|s| *s != eta) {
        return Err(Error::InvalidArgument("this bound assumes a constant step size".into()));
    }
    Ok(eta)
}

fn gaps<T: Scalar>(problem: &FiniteSumProblem<T>, trajectory: &Trajectory<T>) -> Result<Vec<T>> {
    match &trajectory.gaps {
        Some(g) => Ok(g.clone()),
        None => trajectory.iterates.iter().map(|x| problem.gap(x)).collect(),
    }
}

/// Evaluates bound `kind` at every epoch of a run. Theorem kinds compare
/// `f(x_k) − f*` (or the weighted average for `cor-avg`) with the bound for
/// horizon `k`; lemma kinds use `z = x*`.
pub fn bound_report<T: Scalar>(
    kind: BoundKind,
    problem: &FiniteSumProblem<T>,
    trajectory: &Trajectory<T>,
    config: &RunConfig<T>,
) -> Result<BoundReport<T>> {
    let alpha = config.alpha;
    let beta = config.beta_value();
    let t = problem.num_components();
    match kind {
        BoundKind::Thm1 | BoundKind::Thm2 => {
            let eta = constant_step(trajectory)?;
            let consts = SmoothConstants::from_problem(problem, &trajectory.x0)?;
            let gaps = gaps(problem, trajectory)?;
            let mut report = smooth_params(BoundReport::new(kind), &consts, eta, alpha, beta);
            for k in 1..=trajectory.epochs() {
                report.push(k, gaps[k], bound_thm1(&consts, eta, k, alpha, beta)?);
            }
            Ok(report)
        }
        BoundKind::CorAvg => {
            let eta = constant_step(trajectory)?;
            let c = config.averaging_c;
            let consts = SmoothConstants::from_problem(problem, &trajectory.x0)?;
            let mut report = smooth_params(BoundReport::new(kind), &consts, eta, alpha, beta).param("c", c);
            for k in 1..=trajectory.epochs() {
                let sched = build_weights(Regime::IncreasingAverage, &trajectory.steps[..k], alpha, beta, c)?;
                let avg = crate::schedules::weighted_average(&trajectory.iterates[1..=k], &sched.weights[1..])?;
                report.push(k, problem.gap(&avg)?, bound_cor_avg(&consts, eta, k, alpha, beta, c)?);
            }
            Ok(report)
        }
        BoundKind::Thm3 | BoundKind::Thm4 => {
            let g = problem.lipschitz()?;
            let r = crate::linalg::dist(&trajectory.x0, problem.x_star()?);
            let gaps = gaps(problem, trajectory)?;
            let zeros = vec![vec![T::zero(); t]; trajectory.epochs()];
            let eps = trajectory.slot_eps.as_ref().unwrap_or(&zeros);
            let mut report = BoundReport::new(kind)
                .param("G", g)
                .param("R", r)
                .param("T", T::of_usize(t))
                .param("K", T::of_usize(trajectory.epochs()))
                .param("eta", trajectory.steps[0]);
            for k in 1..=trajectory.epochs() {
                let rhs = if kind == BoundKind::Thm3 {
                    bound_thm3_general(g, r, t, &trajectory.steps[..k])
                } else {
                    bound_thm4(g, r, t, &trajectory.steps[..k], &eps[..k])?
                };
                report.push(k, gaps[k], rhs);
            }
            Ok(report)
        }
        BoundKind::Lemma1 => lemma1(problem, trajectory, &Reference::XStar, alpha, beta),
        BoundKind::Lemma4 => lemma4(problem, trajectory, &Reference::XStar, alpha, beta),
        BoundKind::Lemma5 => lemma5(problem, trajectory, &Reference::XStar),
        BoundKind::Lemma6 => lemma6(problem, trajectory, &Reference::XStar),
        BoundKind::Lemma2 => {
            let sched = build_weights(Regime::LastIterateSmooth, &trajectory.steps, alpha, beta, T::one())?;
            Ok(lemma2(problem, trajectory, &sched)?.0)
        }
    }
}

fn smooth_params<T: Scalar>(
    report: BoundReport<T>,
    c: &SmoothConstants<T>,
    eta: T,
    alpha: T,
    beta: T,
) -> BoundReport<T> {
    report
        .param("alpha", alpha)
        .param("beta", beta)
        .param("eta", eta)
        .param("sigma_star_sq", c.sigma_star_sq)
        .param("L", c.smoothness)
        .param("R", c.radius)
        .param("T", T::of_usize(c.components))
}

/// Excess forgetting `f(x_k) − f(x*)` after each full pass `k = 0..K`.
///
/// In the continual-learning reading every component is a task revisited
/// cyclically, and this is the loss on all tasks seen so far above the best
/// joint solution. It coincides with the optimality gap sequence.
pub fn forgetting<T: Scalar>(trajectory: &Trajectory<T>, problem: &FiniteSumProblem<T>) -> Result<Vec<T>> {
    let f_star = problem.f_star()?;
    trajectory
        .iterates
        .iter()
        .map(|x| Ok(problem.evaluate(x)?.value - f_star))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_lipschitz_suite, make_quadratic_suite};
    use crate::solvers::{run, EpsSchedule, Method, StepSchedule};

    #[test]
    fn within_policy() {
        assert!(within(1.0, 1.0, 1e-8));
        assert!(within(1.0 + 1e-9, 1.0, 1e-8));
        assert!(!within(1.0 + 1e-7, 1.0, 1e-8));
        assert!(within(-1.0, -1.0 + 1e-9, 1e-8));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in BoundKind::ALL {
            assert_eq!(BoundKind::parse(k.name()), Some(k));
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.name()));
        }
    }

    #[test]
    fn theorem_reports_hold_on_a_small_run() {
        let p = make_quadratic_suite::<f64>(4, 3, 0.5, 3.0, 2).unwrap();
        let cfg = RunConfig::new(Method::Igd, 32).with_x0(vec![1.0; 4]);
        let tr = run(&p, &cfg).unwrap();
        for kind in [BoundKind::Thm1, BoundKind::CorAvg, BoundKind::Lemma1, BoundKind::Lemma2] {
            let rep = bound_report(kind, &p, &tr, &cfg).unwrap();
            assert_eq!(rep.rows.len(), 32);
            assert!(rep.all_ok(), "{kind:?} {:?}", rep.first_failure());
        }
        let csv = bound_report(BoundKind::Thm1, &p, &tr, &cfg).unwrap().to_csv_string().unwrap();
        assert!(csv.starts_with("k,gap,rhs,ok\n1,"));
    }

    #[test]
    fn nonsmooth_reports_hold() {
        let p = make_lipschitz_suite::<f64>(3, 4, 2.0, 9).unwrap();
        let cfg = RunConfig::new(Method::IpExact, 64)
            .with_step(StepSchedule::Theorem3)
            .with_x0(vec![2.0, -1.0, 0.5]);
        let tr = run(&p, &cfg).unwrap();
        for kind in [BoundKind::Thm3, BoundKind::Lemma5, BoundKind::Lemma6] {
            assert!(bound_report(kind, &p, &tr, &cfg).unwrap().all_ok(), "{kind:?}");
        }
        let cfg = RunConfig::new(Method::IpInexact, 16)
            .with_eps(EpsSchedule::Theorem4)
            .with_x0(vec![2.0, -1.0, 0.5]);
        let tr = run(&p, &cfg).unwrap();
        assert!(bound_report(BoundKind::Thm4, &p, &tr, &cfg).unwrap().all_ok());
        assert!(bound_report(BoundKind::Lemma6, &p, &tr, &cfg).unwrap().all_ok());
    }

    #[test]
    fn forgetting_is_the_gap_sequence() {
        let p = make_quadratic_suite::<f64>(3, 2, 0.0, 2.0, 3).unwrap();
        let cfg = RunConfig::new(Method::Igd, 400).with_x0(vec![1.0, 1.0, 1.0]);
        let tr = run(&p, &cfg).unwrap();
        let f = forgetting(&tr, &p).unwrap();
        assert_eq!(f.len(), 401);
        for (a, b) in f.iter().zip(tr.gaps.as_ref().unwrap()) {
            assert!((a - b).abs() <= 1e-14);
        }
        assert!(*f.last().unwrap() <= 1e-10);
        let at_star = Trajectory {
            iterates: vec![p.x_star().unwrap().to_vec()],
            ..tr.clone()
        };
        assert!(forgetting(&at_star, &p).unwrap()[0].abs() <= 1e-14);
    }
}
