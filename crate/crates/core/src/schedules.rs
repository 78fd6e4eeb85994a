//! Weight sequences `{w_k}`, reference coefficients `{λ_k}` and the reference
//! points `z_k = (1 − λ_k)x_k + λ_k z_{k−1}` used by the last-iterate analysis.
//!
//! Every built-in regime uses the saturating choice `λ_k = w_{k−1}/w_k` with
//! `λ_0 = 1`, `w_{−1} = w_0`, `w_{K−1} = 1`, and the growth ratio
//!
//! ```text
//! w_k / w_{k−1} = 1 + (1 − c) η_k / ((1 + a) S_{k+1}),   S_k = Σ_{j≥k} η_j,
//! ```
//!
//! where `(a, c)` is `(α/β, 0)` for the smooth last iterate, `(0, 0)` for the
//! nonsmooth last iterate, `(α/β, c)` for increasing averaging and `(·, 1)`
//! for the uniform average.

use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::solvers::{check_tradeoff, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    LastIterateSmooth,
    LastIterateNonsmooth,
    IncreasingAverage,
    UniformAverage,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::LastIterateSmooth => "last-iterate-smooth",
            Regime::LastIterateNonsmooth => "last-iterate-nonsmooth",
            Regime::IncreasingAverage => "increasing-average",
            Regime::UniformAverage => "uniform-average",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct WeightSchedule<T> {
    pub regime: Regime,
    /// `λ_0..λ_{K−1}`
    pub lambdas: Vec<T>,
    /// `w_{−1}..w_{K−1}`
    pub weights: Vec<T>,
    /// `η_1..η_K`
    pub steps: Vec<T>,
    pub alpha: T,
    pub beta: T,
    pub c: T,
}

/// One CSV line of a weight schedule; `lambda` is empty for `k = −1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct WeightRow<T> {
    pub k: i64,
    pub lambda: Option<T>,
    pub w: T,
}

/// Builds `{λ_k}, {w_k}` for `K = steps.len()` epochs.
pub fn build_weights<T: Scalar>(
    regime: Regime,
    steps: &[T],
    alpha: T,
    beta: T,
    c: T,
) -> Result<WeightSchedule<T>> {
    let k_total = steps.len();
    if k_total == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    if steps.iter().any(|s| !(*s > T::zero()) || !s.is_finite()) {
        return Err(Error::InvalidArgument("step sizes must be positive and finite".into()));
    }
    if !(alpha > T::zero()) || !(beta > T::zero()) {
        return Err(Error::InvalidArgument("alpha and beta must be > 0".into()));
    }
    let (a, c_eff) = match regime {
        Regime::LastIterateSmooth => {
            check_tradeoff(alpha, beta)?;
            (alpha / beta, T::zero())
        }
        Regime::LastIterateNonsmooth => (T::zero(), T::zero()),
        Regime::IncreasingAverage => {
            check_tradeoff(alpha, beta)?;
            if !(c > T::zero() && c <= T::one()) {
                return Err(Error::InvalidArgument(format!("c must lie in (0, 1], got {c}")));
            }
            (alpha / beta, c)
        }
        Regime::UniformAverage => (alpha / beta, T::one()),
    };

    let tails = tail_sums(steps);
    // ratio_k for k = 1..K−1; index k.
    let mut log_ratio = vec![T::zero(); k_total];
    let mut lambdas = vec![T::one(); k_total];
    for k in 1..k_total {
        let denom = (T::one() + a) * tails[k + 1];
        let excess = (T::one() - c_eff) * steps[k - 1] / denom;
        log_ratio[k] = excess.ln_1p();
        lambdas[k] = T::one() / (T::one() + excess);
    }
    // log w_k = −Σ_{j=k+1}^{K−1} log ratio_j, stored at index k + 1.
    let mut weights = vec![T::zero(); k_total + 1];
    let mut acc = T::zero();
    weights[k_total] = T::one();
    for k in (0..k_total - 1).rev() {
        acc = acc - log_ratio[k + 1];
        weights[k + 1] = acc.exp();
    }
    weights[0] = weights[1];

    Ok(WeightSchedule {
        regime,
        lambdas,
        weights,
        steps: steps.to_vec(),
        alpha,
        beta,
        c: c_eff,
    })
}

/// `S_k = Σ_{j=k}^K η_j` for `k = 1..K+1`, stored at index `k` (index 0 unused).
fn tail_sums<T: Scalar>(steps: &[T]) -> Vec<T> {
    let k_total = steps.len();
    let mut tails = vec![T::zero(); k_total + 2];
    for k in (1..=k_total).rev() {
        tails[k] = tails[k + 1] + steps[k - 1];
    }
    tails
}

impl<T: Scalar> WeightSchedule<T> {
    pub fn epochs(&self) -> usize {
        self.lambdas.len()
    }

    /// `w_k` for `k ∈ {−1, …, K−1}`.
    pub fn w(&self, k: i64) -> T {
        self.weights[(k + 1) as usize]
    }

    /// `η_k` for `k ∈ {1, …, K}`.
    pub fn eta(&self, k: usize) -> T {
        self.steps[k - 1]
    }

    /// `1 + α/β` for the smooth regimes and 1 for the nonsmooth one.
    fn growth_factor(&self) -> T {
        match self.regime {
            Regime::LastIterateNonsmooth => T::one(),
            _ => T::one() + self.alpha / self.beta,
        }
    }

    /// `w_{k−1} − λ_k w_k ≥ 0` for `k = 0..K−1`.
    pub fn ineq1_slack(&self, k: usize) -> T {
        self.w(k as i64 - 1) - self.lambdas[k] * self.w(k as i64)
    }

    /// `η_k w_{k−1} − (1 + α/β) w_k (1 − λ_k) Σ_{j>k} η_j − c η_k w_{k−1}`
    /// for `k = 1..K−1`. Zero when the inequality pair is saturated.
    pub fn ineq2_residual(&self, k: usize) -> T {
        let tail: T = self.steps[k..].iter().copied().sum();
        let lhs = self.eta(k) * self.w(k as i64 - 1)
            - self.growth_factor() * self.w(k as i64) * (T::one() - self.lambdas[k]) * tail;
        lhs - self.c * self.eta(k) * self.w(k as i64 - 1)
    }

    /// Magnitude against which [`Self::ineq2_residual`] is measured.
    pub fn ineq2_scale(&self, k: usize) -> T {
        self.eta(k) * self.w(k as i64 - 1)
    }

    /// `Σ_{k=1}^K w_{k−1}`
    pub fn weight_sum(&self) -> T {
        self.weights[1..].iter().copied().sum()
    }

    /// `e / K^{1/(1+α/β)}`
    pub fn initial_weight_bound(&self) -> T {
        let a = self.alpha / self.beta;
        T::E() / T::of_usize(self.epochs()).powf(T::one() / (T::one() + a))
    }

    /// `e (1 + β/α) K^{(α/β)/(1+α/β)}`
    pub fn weight_sum_bound(&self) -> T {
        let a = self.alpha / self.beta;
        T::E() * (T::one() + self.beta / self.alpha)
            * T::of_usize(self.epochs()).powf(a / (T::one() + a))
    }

    /// `x̂_K = Σ_k w_{k−1} x_k / Σ_k w_{k−1}` over `x_1..x_K`.
    pub fn average_of(&self, trajectory: &Trajectory<T>) -> Result<Vec<T>> {
        weighted_average(&trajectory.iterates[1..], &self.weights[1..])
    }

    pub fn rows(&self) -> Vec<WeightRow<T>> {
        (0..self.weights.len())
            .map(|i| WeightRow {
                k: i as i64 - 1,
                lambda: (i > 0).then(|| self.lambdas[i - 1]),
                w: self.weights[i],
            })
            .collect()
    }

    /// CSV with columns `k, lambda, w`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in self.rows() {
            out.serialize(row)?;
        }
        out.flush().map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Convex combination `Σ w_i p_i / Σ w_i`.
pub fn weighted_average<T: Scalar>(points: &[Vec<T>], weights: &[T]) -> Result<Vec<T>> {
    if points.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: weights.len(),
        });
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument("nothing to average".into()));
    }
    if weights.iter().any(|w| !(*w >= T::zero())) {
        return Err(Error::InvalidArgument("weights must be nonnegative".into()));
    }
    let total: T = weights.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::InvalidArgument("weights must not all vanish".into()));
    }
    let d = points[0].len();
    let mut out = vec![T::zero(); d];
    for (p, &w) in points.iter().zip(weights) {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
        linalg::axpy(w / total, p, &mut out);
    }
    Ok(out)
}

/// Recursive reference points `z_0..z_{K−1}` from `x_0..x_{K−1}`, with
/// `z_{−1} = x*`.
pub fn track_reference<T: Scalar>(iterates: &[Vec<T>], lambdas: &[T], x_star: &[T]) -> Result<Vec<Vec<T>>> {
    if iterates.len() < lambdas.len() {
        return Err(Error::DimensionMismatch {
            expected: lambdas.len(),
            got: iterates.len(),
        });
    }
    let mut tracker = ReferenceTracker::new(x_star.to_vec());
    lambdas
        .iter()
        .zip(iterates)
        .map(|(&l, x)| tracker.update(x, l).map(<[T]>::to_vec))
        .collect()
}

/// Coefficients of the unrolled `z_k`: `(coef of x*, [coef of x_0..x_k])`.
/// They are nonnegative for `λ ∈ [0, 1]` and sum to 1.
pub fn reference_coefficients<T: Scalar>(lambdas: &[T], k: usize) -> (T, Vec<T>) {
    let mut coefs = vec![T::zero(); k + 1];
    // running product Π_{i=j+1}^k λ_i
    let mut tail = T::one();
    for j in (0..=k).rev() {
        coefs[j] = tail * (T::one() - lambdas[j]);
        tail = tail * lambdas[j];
    }
    (tail, coefs)
}

/// `z_k` evaluated from the unrolled form.
pub fn unrolled_reference<T: Scalar>(iterates: &[Vec<T>], lambdas: &[T], x_star: &[T], k: usize) -> Vec<T> {
    let (c_star, coefs) = reference_coefficients(lambdas, k);
    let mut z = linalg::scale(x_star, c_star);
    for (x, c) in iterates.iter().zip(coefs) {
        linalg::axpy(c, x, &mut z);
    }
    z
}

/// Incremental `z_k = (1 − λ_k)x_k + λ_k z_{k−1}` with a digest of every
/// `λ` consumed.
pub struct ReferenceTracker<T> {
    z: Vec<T>,
    steps: usize,
    history: Sha256,
}

impl<T: Scalar> ReferenceTracker<T> {
    pub fn new(x_star: Vec<T>) -> Self {
        Self {
            z: x_star,
            steps: 0,
            history: Sha256::new(),
        }
    }

    pub fn current(&self) -> &[T] {
        &self.z
    }

    /// Number of updates applied; the current point is `z_{steps−1}`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn update(&mut self, x_k: &[T], lambda: T) -> Result<&[T]> {
        if x_k.len() != self.z.len() {
            return Err(Error::DimensionMismatch {
                expected: self.z.len(),
                got: x_k.len(),
            });
        }
        if !(lambda >= T::zero() && lambda <= T::one()) {
            return Err(Error::InvalidArgument(format!("lambda must lie in [0, 1], got {lambda}")));
        }
        for (z, &x) in self.z.iter_mut().zip(x_k) {
            *z = (T::one() - lambda) * x + lambda * *z;
        }
        self.history.update(lambda.as_f64().to_le_bytes());
        self.steps += 1;
        Ok(&self.z)
    }

    /// Hex SHA-256 of the `λ` values consumed so far (as little-endian `f64`).
    pub fn history_hash(&self) -> String {
        hex::encode(self.history.clone().finalize())
    }
}
