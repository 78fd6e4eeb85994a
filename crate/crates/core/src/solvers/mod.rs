//! Epoch-structured methods: incremental gradient descent (optionally with
//! shuffled orderings) and the incremental proximal method.

mod config;
mod trajectory;

use serde::{Deserialize, Serialize};

pub use config::{
    check_tradeoff, four_log_k, step_cap, theorem1_step, theorem3_step, Beta, BetaRule,
    EpsSchedule, Method, RunConfig, StepSchedule,
};
pub use trajectory::{
    envelope_path, read_rows, Trajectory, TrajectoryEnvelope, TrajectoryRow, TRAJECTORY_FORMAT_VERSION,
};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problems::FiniteSumProblem;
use crate::prox::{self, InexactOptions};
use crate::rng::SeededRng;
use crate::scalar::Scalar;

const ORDERING_STREAM: u64 = 0x4f52_4452;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ordering {
    Fixed,
    ShuffleOnce,
    RandomReshuffle,
}

impl Ordering {
    pub fn name(self) -> &'static str {
        match self {
            Ordering::Fixed => "fixed",
            Ordering::ShuffleOnce => "shuffle-once",
            Ordering::RandomReshuffle => "random-reshuffle",
        }
    }
}

/// Component order for each of `K` epochs, as 0-based indices.
pub fn make_ordering(strategy: Ordering, t: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = SeededRng::derived(seed, ORDERING_STREAM);
    match strategy {
        Ordering::Fixed => vec![(0..t).collect(); k],
        Ordering::ShuffleOnce => vec![rng.permutation(t); k],
        Ordering::RandomReshuffle => (0..k).map(|_| rng.permutation(t)).collect(),
    }
}

/// Dispatches on `config.method`.
pub fn run<T: Scalar>(problem: &FiniteSumProblem<T>, config: &RunConfig<T>) -> Result<Trajectory<T>> {
    match config.method {
        Method::Igd => run_igd(problem, config),
        Method::IpExact | Method::IpInexact => run_ip(problem, config),
    }
}

/// `x_{k−1,t+1} = x_{k−1,t} − η_k ∇f_{π_k(t)}(x_{k−1,t})`.
pub fn run_igd<T: Scalar>(problem: &FiniteSumProblem<T>, config: &RunConfig<T>) -> Result<Trajectory<T>> {
    if config.method != Method::Igd {
        return Err(Error::InvalidArgument(format!(
            "run_igd called with method {}",
            config.method.name()
        )));
    }
    if let Some((index, c)) = problem.components().iter().enumerate().find(|(_, c)| !c.is_smooth()) {
        return Err(Error::NonSmoothComponent {
            index,
            kind: c.kind_name(),
        });
    }
    let steps = config.resolve_steps(problem)?;
    let mut state = RunState::start(problem, config, steps)?;
    for k in 0..config.epochs {
        let eta = state.steps[k];
        let mut x = state.current().to_vec();
        let mut inner = state.inner_buffer(&x);
        for &i in &state.ordering[k] {
            let g = problem
                .component(i)
                .gradient(&x)
                .expect("components checked smooth");
            linalg::axpy(-eta, &g, &mut x);
            state.oracle_count += 1;
            if let Some(buf) = inner.as_mut() {
                buf.push(x.clone());
            }
        }
        state.finish_epoch(x, inner, Vec::new());
    }
    Ok(state.into_trajectory())
}

/// `x_{k−1,t+1} = prox_{η_k f_{π_k(t)}}(x_{k−1,t})`, exact or with certified
/// inexactness `ε_{k−1,t}`.
pub fn run_ip<T: Scalar>(problem: &FiniteSumProblem<T>, config: &RunConfig<T>) -> Result<Trajectory<T>> {
    let inexact = match config.method {
        Method::IpExact => false,
        Method::IpInexact => true,
        Method::Igd => {
            return Err(Error::InvalidArgument("run_ip called with method igd".into()));
        }
    };
    if !inexact {
        if let Some(c) = problem.components().iter().find(|c| !prox::has_closed_form(c)) {
            return Err(Error::NoClosedForm { kind: c.kind_name() });
        }
    }
    let steps = config.resolve_steps(problem)?;
    let budgets = if inexact {
        config.resolve_eps(problem)?
    } else {
        Vec::new()
    };
    let options = InexactOptions {
        max_iterations: config.inner_iteration_cap,
    };
    let mut state = RunState::start(problem, config, steps)?;
    for k in 0..config.epochs {
        let eta = state.steps[k];
        let mut x = state.current().to_vec();
        let mut inner = state.inner_buffer(&x);
        let mut slot_eps = Vec::with_capacity(if inexact { problem.num_components() } else { 0 });
        for (slot, &i) in state.ordering[k].iter().enumerate() {
            let c = problem.component(i);
            let step = if inexact {
                prox::prox_inexact_with(c, &x, eta, budgets[k][slot], options)
            } else {
                prox::prox_exact(c, &x, eta)
            }
            .map_err(|e| Error::ProxFailed {
                epoch: k + 1,
                slot: slot + 1,
                source: Box::new(e),
            })?;
            state.oracle_count += 1;
            if inexact {
                state.inner_oracle_count += step.inner_iterations + 1;
                slot_eps.push(step.certified_epsilon);
            }
            x = step.x_plus;
            if let Some(buf) = inner.as_mut() {
                buf.push(x.clone());
            }
        }
        state.finish_epoch(x, inner, slot_eps);
    }
    Ok(state.into_trajectory())
}

struct RunState<'a, T: Scalar> {
    problem: &'a FiniteSumProblem<T>,
    record_inner: bool,
    steps: Vec<T>,
    ordering: Vec<Vec<usize>>,
    iterates: Vec<Vec<T>>,
    inner: Vec<Vec<Vec<T>>>,
    slot_eps: Vec<Vec<T>>,
    oracle_count: usize,
    inner_oracle_count: usize,
    method: Method,
    seed: u64,
}

impl<'a, T: Scalar> RunState<'a, T> {
    fn start(problem: &'a FiniteSumProblem<T>, config: &RunConfig<T>, steps: Vec<T>) -> Result<Self> {
        let x0 = config.initial_point(problem)?;
        let mut iterates = Vec::with_capacity(config.epochs + 1);
        iterates.push(x0);
        Ok(Self {
            problem,
            record_inner: config.record_inner,
            steps,
            ordering: make_ordering(config.ordering, problem.num_components(), config.epochs, config.seed),
            iterates,
            inner: Vec::new(),
            slot_eps: Vec::new(),
            oracle_count: 0,
            inner_oracle_count: 0,
            method: config.method,
            seed: config.seed,
        })
    }

    fn current(&self) -> &[T] {
        self.iterates.last().expect("x0 is always present")
    }

    fn inner_buffer(&self, x: &[T]) -> Option<Vec<Vec<T>>> {
        self.record_inner.then(|| {
            let mut v = Vec::with_capacity(self.problem.num_components() + 1);
            v.push(x.to_vec());
            v
        })
    }

    fn finish_epoch(&mut self, x: Vec<T>, inner: Option<Vec<Vec<T>>>, slot_eps: Vec<T>) {
        if let Some(buf) = inner {
            self.inner.push(buf);
        }
        if self.method == Method::IpInexact {
            self.slot_eps.push(slot_eps);
        }
        self.iterates.push(x);
    }

    fn into_trajectory(self) -> Trajectory<T> {
        let p = self.problem;
        let gaps = p
            .f_star()
            .ok()
            .map(|fs| self.iterates.iter().map(|x| p.objective(x) - fs).collect());
        let dist_to_x_star = p
            .x_star()
            .ok()
            .map(|xs| self.iterates.iter().map(|x| linalg::dist(x, xs)).collect());
        let per_epoch_eps = if self.slot_eps.is_empty() {
            vec![T::zero(); self.steps.len()]
        } else {
            self.slot_eps.iter().map(|row| row.iter().copied().sum()).collect()
        };
        Trajectory {
            method: self.method,
            seed: self.seed,
            x0: self.iterates[0].clone(),
            iterates: self.iterates,
            gaps,
            dist_to_x_star,
            steps: self.steps,
            inner_iterates: self.record_inner.then_some(self.inner),
            slot_eps: (!self.slot_eps.is_empty()).then_some(self.slot_eps),
            per_epoch_eps,
            ordering: self.ordering,
            oracle_count: self.oracle_count,
            inner_oracle_count: self.inner_oracle_count,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::problems::{make_quadratic_suite, Component};

    fn half_square() -> FiniteSumProblem<f64> {
        let c = Component::quadratic(Matrix::identity(1), vec![0.0]).unwrap();
        FiniteSumProblem::new(vec![c]).unwrap().with_minimizer(vec![0.0]).unwrap()
    }

    #[test]
    fn igd_scalar_contraction() {
        let cfg = RunConfig::new(Method::Igd, 3)
            .with_step(StepSchedule::Constant { value: 0.5 })
            .with_x0(vec![1.0]);
        let mut cfg = cfg;
        cfg.enforce_step_cap = false;
        let tr = run_igd(&half_square(), &cfg).unwrap();
        let xs: Vec<f64> = tr.iterates.iter().map(|x| x[0]).collect();
        assert_eq!(xs, vec![1.0, 0.5, 0.25, 0.125]);
        assert_eq!(tr.oracle_count, 3);
    }

    #[test]
    fn ip_scalar_contraction() {
        let mut cfg = RunConfig::new(Method::IpExact, 3)
            .with_step(StepSchedule::Constant { value: 1.0 })
            .with_x0(vec![1.0]);
        cfg.enforce_step_cap = false;
        let tr = run_ip(&half_square(), &cfg).unwrap();
        for (x, want) in tr.iterates.iter().zip([1.0, 0.5, 0.25, 0.125]) {
            assert!((x[0] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn fixed_ordering_is_identity() {
        assert_eq!(make_ordering(Ordering::Fixed, 3, 2, 9), vec![vec![0, 1, 2]; 2]);
    }

    #[test]
    fn shuffle_once_repeats_one_permutation() {
        let o = make_ordering(Ordering::ShuffleOnce, 3, 5, 4);
        assert!(o.iter().all(|row| row == &o[0]));
        let mut sorted = o[0].clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2]);
    }

    #[test]
    fn random_reshuffle_is_uniform_over_permutations() {
        use std::collections::HashMap;
        let k = 60_000;
        let o = make_ordering(Ordering::RandomReshuffle, 3, k, 17);
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for row in o {
            *counts.entry(row).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        for &c in counts.values() {
            assert!((c as f64 / k as f64 - 1.0 / 6.0).abs() <= 0.01);
        }
    }

    #[test]
    fn inner_iterates_bracket_epochs() {
        let p = make_quadratic_suite::<f64>(3, 4, 1.0, 3.0, 2).unwrap();
        let cfg = RunConfig::new(Method::Igd, 5)
            .with_ordering(Ordering::RandomReshuffle)
            .with_seed(3)
            .recording_inner();
        let tr = run_igd(&p, &cfg).unwrap();
        let inner = tr.inner_iterates.as_ref().unwrap();
        assert_eq!(tr.iterates.len(), 6);
        assert_eq!(inner.len(), 5);
        for k in 0..5 {
            assert_eq!(inner[k].len(), 5);
            assert_eq!(inner[k][0], tr.iterates[k]);
            assert_eq!(inner[k][4], tr.iterates[k + 1]);
        }
        assert_eq!(tr.oracle_count, 20);
    }

    #[test]
    fn runs_are_deterministic() {
        let p = make_quadratic_suite::<f64>(4, 3, 2.0, 5.0, 8).unwrap();
        let cfg = RunConfig::new(Method::Igd, 30)
            .with_ordering(Ordering::RandomReshuffle)
            .with_seed(11);
        assert_eq!(run(&p, &cfg).unwrap(), run(&p, &cfg).unwrap());
    }

    #[test]
    fn igd_rejects_nonsmooth_components() {
        let c = Component::scaled_absolute(vec![1.0], 0.0, 1.0).unwrap();
        let p = FiniteSumProblem::new(vec![c]).unwrap();
        let cfg = RunConfig::new(Method::Igd, 2).with_step(StepSchedule::Constant { value: 0.1 });
        assert!(matches!(
            run_igd(&p, &cfg),
            Err(Error::NonSmoothComponent { index: 0, .. })
        ));
    }

    #[test]
    fn ip_exact_rejects_logistic() {
        let c = Component::logistic_l2(vec![1.0], 1.0, 0.1).unwrap();
        let p = FiniteSumProblem::new(vec![c]).unwrap();
        let mut cfg = RunConfig::new(Method::IpExact, 2).with_step(StepSchedule::Constant { value: 0.1 });
        cfg.enforce_step_cap = false;
        assert!(matches!(run_ip(&p, &cfg), Err(Error::NoClosedForm { .. })));
    }

    #[test]
    fn prox_failures_carry_location() {
        let c = Component::logistic_l2(vec![1.0], 1.0, 0.1).unwrap();
        let p = FiniteSumProblem::new(vec![c.clone(), c]).unwrap();
        let mut cfg = RunConfig::new(Method::IpInexact, 2).with_step(StepSchedule::Constant { value: 0.1 });
        cfg.enforce_step_cap = false;
        cfg.inner_iteration_cap = 10;
        cfg.x0 = Some(vec![1.0]);
        match run_ip(&p, &cfg) {
            Err(Error::ProxFailed { epoch: 1, slot: 1, source }) => {
                assert!(matches!(*source, Error::BudgetUnreachable { .. }))
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
