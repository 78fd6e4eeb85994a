//! Per-epoch inequalities checked along recorded trajectories.
//!
//! Every verifier reports `T(f(x_k) − f(z))` as the measured side against the
//! lemma's right-hand side, for a reference `z` held fixed over the epoch.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::{within, BoundKind, BoundReport};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problems::FiniteSumProblem;
use crate::rng::SeededRng;
use crate::scalar::Scalar;
use crate::schedules::{track_reference, WeightSchedule};
use crate::solvers::{check_tradeoff, step_cap, Trajectory};

/// Largest `T` for which the permutation expectation is enumerated.
pub const LEMMA3_EXHAUSTIVE_CAP: usize = 8;

const LEMMA3_STREAM: u64 = 0x4c45_4d33;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", bound = "T: Scalar")]
pub enum Reference<T> {
    XStar,
    X0,
    /// `(x₀ + x*)/2`
    Midpoint,
    Point(Vec<T>),
}

impl<T: Scalar> Reference<T> {
    fn resolve(&self, problem: &FiniteSumProblem<T>, trajectory: &Trajectory<T>) -> Result<Vec<T>> {
        let z = match self {
            Reference::XStar => problem.x_star()?.to_vec(),
            Reference::X0 => trajectory.x0.clone(),
            Reference::Midpoint => {
                let mut m = linalg::add(&trajectory.x0, problem.x_star()?);
                m.iter_mut().for_each(|v| *v = *v * T::half());
                m
            }
            Reference::Point(p) => p.clone(),
        };
        if z.len() != problem.dim() {
            return Err(Error::DimensionMismatch {
                expected: problem.dim(),
                got: z.len(),
            });
        }
        Ok(z)
    }

    fn label(&self) -> &'static str {
        match self {
            Reference::XStar => "x_star",
            Reference::X0 => "x0",
            Reference::Midpoint => "midpoint",
            Reference::Point(_) => "point",
        }
    }
}

/// `Σ_{t=first}^{T} ‖Σ_{s=t}^T g_{π(s)}‖²` with 1-based `first`.
fn tail_norms<T: Scalar>(grads: &[Vec<T>], order: &[usize], first: usize) -> T {
    let d = grads.first().map_or(0, Vec::len);
    let mut acc = vec![T::zero(); d];
    let mut total = T::zero();
    for (pos, &i) in order.iter().enumerate().rev() {
        linalg::axpy(T::one(), &grads[i], &mut acc);
        if pos + 1 >= first {
            total = total + linalg::norm_sq(&acc);
        }
    }
    total
}

/// `Σ_{t=1}^T ‖Σ_{s=t}^T g_{π(s)}‖²` for the processing order `π`.
pub fn shuffle_variance_sum<T: Scalar>(grads: &[Vec<T>], order: &[usize]) -> T {
    tail_norms(grads, order, 1)
}

/// `T(f(x_k) − f(z))` and `(1/2η)(‖x_{k−1} − z‖² − ‖x_k − z‖²)`.
fn epoch_terms<T: Scalar>(problem: &FiniteSumProblem<T>, trajectory: &Trajectory<T>, k: usize, z: &[T], fz: T) -> (T, T) {
    let tt = T::of_usize(problem.num_components());
    let eta = trajectory.steps[k - 1];
    let lhs = tt * (problem.objective(&trajectory.iterates[k]) - fz);
    let telescope = (linalg::dist_sq(&trajectory.iterates[k - 1], z) - linalg::dist_sq(&trajectory.iterates[k], z))
        / (T::two() * eta);
    (lhs, telescope)
}

fn smooth_cycle<T: Scalar>(
    kind: BoundKind,
    problem: &FiniteSumProblem<T>,
    trajectory: &Trajectory<T>,
    reference: &Reference<T>,
    alpha: T,
    beta: T,
    first: usize,
) -> Result<BoundReport<T>> {
    check_tradeoff(alpha, beta)?;
    let l = problem.smoothness()?;
    let tt = T::of_usize(problem.num_components());
    let cap = step_cap(l, tt, beta);
    if let Some((i, s)) = trajectory
        .steps
        .iter()
        .enumerate()
        .find(|(_, s)| **s > cap * (T::one() + T::of(1e-12)))
    {
        return Err(Error::StepCapViolated {
            step: s.as_f64(),
            cap: cap.as_f64(),
            epoch: i + 1,
        });
    }
    let grads = problem.component_gradients(problem.x_star()?)?;
    let f_star = problem.f_star()?;
    let z = reference.resolve(problem, trajectory)?;
    let fz = problem.objective(&z);
    let mut report = BoundReport::new(kind)
        .param("alpha", alpha)
        .param("beta", beta)
        .param("L", l)
        .param("T", tt);
    report.params.insert(format!("z={}", reference.label()), 1.0);
    for k in 1..=trajectory.epochs() {
        let eta = trajectory.steps[k - 1];
        let (lhs, telescope) = epoch_terms(problem, trajectory, k, &z, fz);
        let variance = tail_norms(&grads, &trajectory.ordering[k - 1], first);
        let rhs = eta * eta * l * variance + alpha / beta * tt * (fz - f_star) + telescope;
        report.push(k, lhs, rhs);
    }
    Ok(report)
}

/// Per-epoch descent inequality for IGD:
/// `T(f(x_k) − f(z)) ≤ η_k² L Σ_{t=1}^T‖Σ_{s≥t}∇f_{π(s)}(x*)‖² + (α/β)T(f(z) − f*)
///  + (1/2η_k)(‖x_{k−1} − z‖² − ‖x_k − z‖²)`.
pub fn lemma1<T: Scalar>(
    problem: &FiniteSumProblem<T>,
    trajectory: &Trajectory<T>,
    reference: &Reference<T>,
    alpha: T,
    beta: T,
) -> Result<BoundReport<T>> {
    smooth_cycle(BoundKind::Lemma1, problem, trajectory, reference, alpha, beta, 1)
}

/// Smooth incremental proximal analogue of [`lemma1`], whose variance sum
/// runs over `t = 1..T−1` and `s ≥ t+1`.
pub fn lemma4<T: Scalar>(
    problem: &FiniteSumProblem<T>,
    trajectory: &Trajectory<T>,
    reference: &Reference<T>,
    alpha: T,
    beta: T,
) -> Result<BoundReport<T>> {
    smooth_cycle(BoundKind::Lemma4, problem, trajectory, reference, alpha, beta, 2)
}

fn lipschitz_cycle<T: Scalar>(
    kind: BoundKind,
    problem: &FiniteSumProblem<T>,
    trajectory: &Trajectory<T>,
    reference: &Reference<T>,
    with_eps: bool,
) -> Result<BoundReport<T>> {
    let g = problem.lipschitz()?;
    let t = problem.num_components();
    let tt = T::of_usize(t);
    let z = reference.resolve(problem, trajectory)?;
    let fz = problem.objective(&z);
    let mut report = BoundReport::new(kind).param("G", g).param("T", tt);
    report.params.insert(format!("z={}", reference.label()), 1.0);
    for k in 1..=trajectory.epochs() {
        let eta = trajectory.steps[k - 1];
        let (lhs, telescope) = epoch_terms(problem, trajectory, k, &z, fz);
        let mut rhs = telescope + tt * (tt - T::one()) * g * g * eta / T::two();
        if with_eps {
            if let Some(row) = trajectory.slot_eps.as_ref().map(|e| &e[k - 1]) {
                let s1: T = row.iter().copied().sum();
                let s2: T = row.iter().map(|e| *e * *e).sum();
                rhs = rhs + s2 / (T::two() * eta) + g * tt * s1;
            }
        }
        report.push(k, lhs, rhs);
    }
    Ok(report)
}

/// Per-epoch inequality for the incremental proximal method on
/// `G`-Lipschitz components:
/// `T(f(x_k) − f(z)) ≤ (1/2η_k)(‖x_{k−1} − z‖² − ‖x_k − z‖²) + T(T−1)G²η_k/2`.
pub fn lemma5<T: Scalar>(
    problem: &FiniteSumProblem<T>,
    trajectory: &Trajectory<T>,
    reference: &Reference<T>,
) -> Result<BoundReport<T>> {
    lipschitz_cycle(BoundKind::Lemma5, problem, trajectory, reference, false)
}

/// [`lemma5`] plus `(1/2η_k)Σ_t ε²_{k−1,t} + GT Σ_t ε_{k−1,t}` with the
/// realized certified errors (zero for exact runs).
pub fn lemma6<T: Scalar>(
    problem: &FiniteSumProblem<T>,
    trajectory: &Trajectory<T>,
    reference: &Reference<T>,
) -> Result<BoundReport<T>> {
    lipschitz_cycle(BoundKind::Lemma6, problem, trajectory, reference, true)
}

/// Both parts of the reference-sequence lemma along a trajectory, for `k = 1..K`:
///
/// 1. `w_{k−1}(f(z_{k−1}) − f*) ≤ Σ_{j<k} w_j(1−λ_j)(f(x_j) − f*)`;
/// 2. `w_{k−1}(f(x_k) − f(z_{k−1})) ≥ w_{k−1}(f(x_k) − f*) − Σ_{j<k} w_j(1−λ_j)(f(x_j) − f*)`,
///    reported with the sides swapped so that every row reads `gap ≤ rhs`.
pub fn lemma2<T: Scalar>(
    problem: &FiniteSumProblem<T>,
    trajectory: &Trajectory<T>,
    schedule: &WeightSchedule<T>,
) -> Result<(BoundReport<T>, BoundReport<T>)> {
    let k_total = trajectory.epochs();
    if schedule.epochs() != k_total {
        return Err(Error::DimensionMismatch {
            expected: k_total,
            got: schedule.epochs(),
        });
    }
    let x_star = problem.x_star()?;
    let f_star = problem.f_star()?;
    let z = track_reference(&trajectory.iterates[..k_total], &schedule.lambdas, x_star)?;
    let fx: Vec<T> = trajectory.iterates.iter().map(|x| problem.objective(x) - f_star).collect();
    let mut part1 = BoundReport::new(BoundKind::Lemma2).param("part", T::one());
    let mut part2 = BoundReport::new(BoundKind::Lemma2).param("part", T::two());
    let mut retraction = T::zero();
    for k in 1..=k_total {
        let j = k - 1;
        retraction = retraction + schedule.w(j as i64) * (T::one() - schedule.lambdas[j]) * fx[j];
        let w = schedule.w(k as i64 - 1);
        let fz = problem.objective(&z[k - 1]);
        part1.push(k, w * (fz - f_star), retraction);
        part2.push(k, w * fx[k] - retraction, w * (problem.objective(&trajectory.iterates[k]) - fz));
    }
    Ok((part1, part2))
}

/// Exact expectation of [`shuffle_variance_sum`] over all `T!` orders.
pub fn lemma3_exhaustive<T: Scalar>(grads: &[Vec<T>]) -> Result<T> {
    let t = grads.len();
    if t > LEMMA3_EXHAUSTIVE_CAP {
        return Err(Error::FactorialCap {
            t,
            cap: LEMMA3_EXHAUSTIVE_CAP,
        });
    }
    let mut total = T::zero();
    let mut count = 0usize;
    for perm in (0..t).permutations(t) {
        total = total + shuffle_variance_sum(grads, &perm);
        count += 1;
    }
    Ok(total / T::of_usize(count.max(1)))
}

/// Sample mean and standard error of [`shuffle_variance_sum`] over uniformly
/// random orders.
pub fn lemma3_monte_carlo<T: Scalar>(grads: &[Vec<T>], samples: usize, seed: u64) -> Result<(T, T)> {
    if samples < 2 {
        return Err(Error::InvalidArgument("monte-carlo needs at least 2 samples".into()));
    }
    let mut rng = SeededRng::derived(seed, LEMMA3_STREAM);
    // Welford
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for i in 0..samples {
        let v = shuffle_variance_sum(grads, &rng.permutation(grads.len())).as_f64();
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (samples - 1) as f64;
    Ok((T::of(mean), T::of((var / samples as f64).sqrt())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma3Mode {
    Exhaustive,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Lemma3Outcome<T> {
    pub lhs: T,
    pub rhs: T,
    pub ok: bool,
    /// Standard error of `lhs` in Monte-Carlo mode.
    pub std_error: Option<T>,
}

/// Checks `E_π[Σ_t ‖Σ_{s≥t}∇f_{π(s)}(x*)‖²] ≤ T(T+1)σ*²/6`.
/// Monte-Carlo mode allows three standard errors on top of `1e−10`.
pub fn verify_lemma3<T: Scalar>(
    problem: &FiniteSumProblem<T>,
    mode: Lemma3Mode,
    samples: usize,
    seed: u64,
) -> Result<Lemma3Outcome<T>> {
    let t = problem.num_components();
    if mode == Lemma3Mode::Exhaustive && t > LEMMA3_EXHAUSTIVE_CAP {
        return Err(Error::FactorialCap {
            t,
            cap: LEMMA3_EXHAUSTIVE_CAP,
        });
    }
    let grads = problem.component_gradients(problem.x_star()?)?;
    let sigma_sq = grads.iter().map(|g| linalg::norm_sq(g)).sum::<T>() / T::of_usize(t);
    let tt = T::of_usize(t);
    let rhs = tt * (tt + T::one()) * sigma_sq / T::of(6.0);
    let tol = T::of(1e-10);
    Ok(match mode {
        Lemma3Mode::Exhaustive => {
            let lhs = lemma3_exhaustive(&grads)?;
            Lemma3Outcome {
                lhs,
                rhs,
                ok: lhs <= rhs + tol,
                std_error: None,
            }
        }
        Lemma3Mode::MonteCarlo => {
            let (lhs, se) = lemma3_monte_carlo(&grads, samples, seed)?;
            Lemma3Outcome {
                lhs,
                rhs,
                ok: within(lhs, rhs + T::of(3.0) * se + tol, T::zero()),
                std_error: Some(se),
            }
        }
    })
}
