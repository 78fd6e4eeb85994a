//! Closed-form right-hand sides of the last-iterate guarantees.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::FiniteSumProblem;
use crate::scalar::Scalar;
use crate::solvers::{check_tradeoff, step_cap};

/// Constants entering the smooth bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SmoothConstants<T> {
    pub sigma_star_sq: T,
    pub smoothness: T,
    /// `‖x₀ − x*‖`
    pub radius: T,
    pub components: usize,
}

impl<T: Scalar> SmoothConstants<T> {
    /// Exact constants of a problem with known minimizer, measured from `x0`.
    pub fn from_problem(problem: &FiniteSumProblem<T>, x0: &[T]) -> Result<Self> {
        let x_star = problem.x_star()?;
        Ok(Self {
            sigma_star_sq: problem
                .meta()
                .sigma_star_sq
                .ok_or(Error::UnknownConstant("sigma_star_sq"))?,
            smoothness: problem.smoothness()?,
            radius: crate::linalg::dist(x0, x_star),
            components: problem.num_components(),
        })
    }

    fn t(&self) -> T {
        T::of_usize(self.components)
    }

    fn check_step(&self, eta: T, beta: T) -> Result<()> {
        let cap = step_cap(self.smoothness, self.t(), beta);
        if !(eta > T::zero()) || eta > cap * (T::one() + T::of(1e-12)) {
            return Err(Error::StepCapViolated {
                step: eta.as_f64(),
                cap: cap.as_f64(),
                epoch: 0,
            });
        }
        Ok(())
    }
}

/// Last-iterate bound for IGD (and, unchanged, for the smooth incremental
/// proximal method and the shuffled variants in expectation):
///
/// `e η² T² σ*² L (1+β/α) K^{(α/β)/(1+α/β)} + e R² / (2 T η K^{1/(1+α/β)})`.
pub fn bound_thm1<T: Scalar>(c: &SmoothConstants<T>, eta: T, k: usize, alpha: T, beta: T) -> Result<T> {
    check_tradeoff(alpha, beta)?;
    c.check_step(eta, beta)?;
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    let a = alpha / beta;
    let kk = T::of_usize(k);
    let t = c.t();
    let first = T::E() * eta * eta * t * t * c.sigma_star_sq * c.smoothness * (T::one() + beta / alpha)
        * kk.powf(a / (T::one() + a));
    let second = T::E() * c.radius * c.radius / (T::two() * t * eta * kk.powf(T::one() / (T::one() + a)));
    Ok(first + second)
}

/// Increasing weighted averaging: `T²σ*²η²L/c + R²/(2cηTK)`.
pub fn bound_cor_avg<T: Scalar>(
    c: &SmoothConstants<T>,
    eta: T,
    k: usize,
    alpha: T,
    beta: T,
    averaging_c: T,
) -> Result<T> {
    check_tradeoff(alpha, beta)?;
    c.check_step(eta, beta)?;
    if !(averaging_c > T::zero() && averaging_c <= T::one()) {
        return Err(Error::InvalidArgument(format!("c must lie in (0, 1], got {averaging_c}")));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    let t = c.t();
    let first = t * t * c.sigma_star_sq * eta * eta * c.smoothness / averaging_c;
    let second = c.radius * c.radius / (T::two() * averaging_c * eta * t * T::of_usize(k));
    Ok(first + second)
}

/// `G R (1 + ln K / 2) / √K`.
pub fn bound_thm3<T: Scalar>(g: T, r: T, k: usize) -> T {
    let kk = T::of_usize(k);
    g * r * (T::one() + kk.ln() / T::two()) / kk.sqrt()
}

/// General nonsmooth bound for steps `η_1..η_K`:
/// `R²/(2T Σ_k η_k) + (G²T/2) Σ_k η_k² / Σ_{j≥k} η_j`.
pub fn bound_thm3_general<T: Scalar>(g: T, r: T, t: usize, steps: &[T]) -> T {
    let tt = T::of_usize(t);
    let mut tail = T::zero();
    let mut acc = T::zero();
    for &eta in steps.iter().rev() {
        tail = tail + eta;
        acc = acc + eta * eta / tail;
    }
    r * r / (T::two() * tt * tail) + g * g * tt / T::two() * acc
}

/// Inexact nonsmooth bound: the general nonsmooth terms plus
/// `(1/2T) Σ_k Σ_t ε²_{k−1,t} / S_k + G Σ_k Σ_t ε_{k−1,t} η_k / S_k`
/// with `S_k = Σ_{j≥k} η_j`. `eps[k][t]` is the error of slot `t+1` in epoch `k+1`.
pub fn bound_thm4<T: Scalar>(g: T, r: T, t: usize, steps: &[T], eps: &[Vec<T>]) -> Result<T> {
    if eps.len() != steps.len() {
        return Err(Error::DimensionMismatch {
            expected: steps.len(),
            got: eps.len(),
        });
    }
    let tt = T::of_usize(t);
    let (sq, lin) = thm4_error_terms(g, steps, eps);
    Ok(bound_thm3_general(g, r, t, steps) + sq / (T::two() * tt) + lin)
}

/// `(Σ_k Σ_t ε²/S_k, G Σ_k Σ_t ε η_k/S_k)`.
pub fn thm4_error_terms<T: Scalar>(g: T, steps: &[T], eps: &[Vec<T>]) -> (T, T) {
    let mut tail = T::zero();
    let mut sq = T::zero();
    let mut lin = T::zero();
    for (&eta, row) in steps.iter().zip(eps).rev() {
        tail = tail + eta;
        let s1: T = row.iter().copied().sum();
        let s2: T = row.iter().map(|e| *e * *e).sum();
        sq = sq + s2 / tail;
        lin = lin + g * s1 * eta / tail;
    }
    (sq, lin)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts(sigma_sq: f64) -> SmoothConstants<f64> {
        SmoothConstants {
            sigma_star_sq: sigma_sq,
            smoothness: 1.0,
            radius: 1.0,
            components: 10,
        }
    }

    #[test]
    fn thm1_without_variance_is_the_initialization_term() {
        let k = 256;
        let beta = 4.0 * (k as f64).ln();
        let eta = 1.0 / (beta.sqrt() * 10.0);
        let got = bound_thm1(&consts(0.0), eta, k, 4.0, beta).unwrap();
        let a = 4.0 / beta;
        let want = std::f64::consts::E / (2.0 * 10.0 * eta * (k as f64).powf(1.0 / (1.0 + a)));
        assert!((got - want).abs() <= 1e-14 * want);
    }

    #[test]
    fn thm1_term_by_term() {
        let k = 256usize;
        let beta = 4.0 * (k as f64).ln();
        let eta = 1.0 / (beta.sqrt() * 10.0);
        let got = bound_thm1(&consts(1.0), eta, k, 4.0, beta).unwrap();
        let e = std::f64::consts::E;
        let ratio = 4.0 / beta;
        let exp1 = ratio / (1.0 + ratio);
        let exp2 = 1.0 / (1.0 + ratio);
        let t1 = e * eta.powi(2) * 100.0 * 1.0 * 1.0 * (1.0 + beta / 4.0) * (k as f64).powf(exp1);
        let t2 = e * 1.0 / (2.0 * 10.0 * eta * (k as f64).powf(exp2));
        assert!((got - (t1 + t2)).abs() <= 1e-12 * got);
    }

    #[test]
    fn thm1_rejects_preconditions() {
        assert!(matches!(
            bound_thm1(&consts(1.0), 1e-3, 16, 2.0, 2.0),
            Err(Error::InvalidTradeoff { .. })
        ));
        assert!(matches!(
            bound_thm1(&consts(1.0), 1.0, 16, 4.0, 16.0),
            Err(Error::StepCapViolated { .. })
        ));
    }

    #[test]
    fn thm1_monotone_in_variance_step_and_k() {
        let beta = 16.0;
        let cap = 1.0 / (4.0 * 10.0);
        let b = |s: f64, eta: f64, k: usize| bound_thm1(&consts(s), eta, k, 4.0, beta).unwrap();
        assert!(b(2.0, cap, 64) >= b(1.0, cap, 64));
        let first = |eta: f64| b(1.0, eta, 64) - b(0.0, eta, 64);
        assert!(first(cap) >= first(cap / 2.0));
        let second = |k: usize| b(0.0, cap, k);
        assert!(second(128) <= second(64));
    }

    #[test]
    fn thm3_closed_forms() {
        assert_eq!(bound_thm3(2.0, 3.0, 1), 6.0);
        let k_e2 = std::f64::consts::E.powi(2);
        let got = 2.0 * 3.0 * (1.0 + k_e2.ln() / 2.0) / k_e2.sqrt();
        assert!((got - 6.0 * 2.0 / std::f64::consts::E).abs() < 1e-14);
        let oracle = 4.0 * (1.0 + 100f64.ln() / 2.0) / 10.0;
        assert!((bound_thm3(1.0, 4.0, 100) - oracle).abs() < 1e-15);
    }

    #[test]
    fn thm3_general_sits_below_final_display() {
        for k in [1usize, 4, 16, 100, 4096] {
            let (g, r, t) = (3.0, 2.0, 8usize);
            let eta = r / (g * t as f64 * (k as f64).sqrt());
            let general = bound_thm3_general(g, r, t, &vec![eta; k]);
            let harmonic: f64 = (1..=k).map(|j| 1.0 / j as f64).sum();
            let exact = g * r * (1.0 + harmonic) / (2.0 * (k as f64).sqrt());
            assert!((general - exact).abs() <= 1e-12 * exact);
            assert!(general <= bound_thm3(g, r, k) * (1.0 + 1e-14));
        }
    }

    #[test]
    fn thm4_reduces_and_scales() {
        let (g, r, t, k) = (1.0, 4.0, 3usize, 50usize);
        let eta = r / (g * t as f64 * (k as f64).sqrt());
        let steps = vec![eta; k];
        let zero = vec![vec![0.0; t]; k];
        assert_eq!(bound_thm4(g, r, t, &steps, &zero).unwrap(), bound_thm3_general(g, r, t, &steps));
        let e = r / (t as f64 * (k as f64).sqrt());
        let eps = vec![vec![e; t]; k];
        let eps2 = vec![vec![2.0 * e; t]; k];
        let (sq1, lin1) = thm4_error_terms(g, &steps, &eps);
        let (sq2, lin2) = thm4_error_terms(g, &steps, &eps2);
        assert!((sq2 - 4.0 * sq1).abs() <= 1e-12 * sq2);
        assert!((lin2 - 2.0 * lin1).abs() <= 1e-12 * lin2);
        // both error terms stay within a log factor of G R / √K
        let scale = g * r / (k as f64).sqrt() * (1.0 + (k as f64).ln());
        assert!(sq1 / (2.0 * t as f64) <= scale && lin1 <= scale);
    }

    #[test]
    fn cor_avg_matches_formula() {
        let c = consts(2.0);
        let eta = 0.01;
        let got = bound_cor_avg(&c, eta, 64, 4.0, 16.0, 0.25).unwrap();
        let want = 100.0 * 2.0 * eta * eta / 0.25 + 1.0 / (2.0 * 0.25 * eta * 10.0 * 64.0);
        assert!((got - want).abs() <= 1e-14 * want);
        assert!(bound_cor_avg(&c, eta, 64, 4.0, 16.0, 0.0).is_err());
    }
}
