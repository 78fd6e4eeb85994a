use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problems::FiniteSumProblem;
use crate::prox::DEFAULT_INNER_ITERATION_CAP;
use crate::scalar::Scalar;

use super::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "igd")]
    Igd,
    #[serde(rename = "ip-exact")]
    IpExact,
    #[serde(rename = "ip-inexact")]
    IpInexact,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Igd => "igd",
            Method::IpExact => "ip-exact",
            Method::IpInexact => "ip-inexact",
        }
    }
}

/// Step sizes `η_k`. The theorem kinds resolve against problem constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields, bound = "T: Scalar")]
pub enum StepSchedule<T> {
    Constant { value: T },
    /// `min{R^{2/3}/(2^{1/3}Tσ*^{2/3}L^{1/3}K^{1/3}(1+β/α)^{1/3}), 1/(√β T L)}`
    Theorem1,
    /// Same step as `Theorem1`, used with the proximal method.
    Theorem2,
    /// `R/(G T √K)`
    Theorem3,
    /// Same step as `Theorem3`, used with inexact proximal steps.
    Theorem4,
    /// One value per epoch.
    CustomList { values: Vec<T> },
}

/// `β`, either fixed or `4·max(ln K, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, bound = "T: Scalar")]
pub enum Beta<T> {
    Value(T),
    Rule(BetaRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BetaRule {
    #[serde(rename = "4lnK")]
    FourLogK,
}

/// Inexactness budgets `ε_{k−1,t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields, bound = "T: Scalar")]
pub enum EpsSchedule<T> {
    None,
    Constant { value: T },
    /// `R/(T√K)` in every slot.
    Theorem4,
    /// `values[k][t]` for epoch `k+1`, slot `t+1`.
    PerSlot { values: Vec<Vec<T>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
pub struct RunConfig<T> {
    pub method: Method,
    pub epochs: usize,
    pub step: StepSchedule<T>,
    pub ordering: Ordering,
    pub alpha: T,
    pub beta: Beta<T>,
    pub averaging_c: T,
    pub eps: EpsSchedule<T>,
    pub seed: u64,
    #[serde(default)]
    pub record_inner: bool,
    /// Starting point; zeros when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<T>>,
    /// Upper bound on `‖x₀ − x*‖` for problems with unknown `x*`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<T>,
    /// Reject smooth-problem steps above `1/(√β T L)`.
    pub enforce_step_cap: bool,
    pub inner_iteration_cap: usize,
}

impl<T: Scalar> RunConfig<T> {
    /// Defaults: fixed ordering, `α = 4`, `β = 4 ln K`, `c = 1`, exact steps,
    /// seed 0, step-cap enforcement on, step per the method's theorem.
    pub fn new(method: Method, epochs: usize) -> Self {
        let step = match method {
            Method::Igd => StepSchedule::Theorem1,
            Method::IpExact => StepSchedule::Theorem2,
            Method::IpInexact => StepSchedule::Theorem4,
        };
        Self {
            method,
            epochs,
            step,
            ordering: Ordering::Fixed,
            alpha: T::of(4.0),
            beta: Beta::Rule(BetaRule::FourLogK),
            averaging_c: T::one(),
            eps: EpsSchedule::None,
            seed: 0,
            record_inner: false,
            x0: None,
            radius: None,
            enforce_step_cap: true,
            inner_iteration_cap: DEFAULT_INNER_ITERATION_CAP,
        }
    }

    pub fn with_step(mut self, step: StepSchedule<T>) -> Self {
        self.step = step;
        self
    }

    pub fn with_ordering(mut self, ordering: Ordering) -> Self {
        self.ordering = ordering;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_eps(mut self, eps: EpsSchedule<T>) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_x0(mut self, x0: Vec<T>) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn recording_inner(mut self) -> Self {
        self.record_inner = true;
        self
    }

    pub fn beta_value(&self) -> T {
        match self.beta {
            Beta::Value(b) => b,
            Beta::Rule(BetaRule::FourLogK) => four_log_k(self.epochs),
        }
    }

    /// `1/α + 1/β ≤ 1/2`.
    pub fn check_tradeoff(&self) -> Result<()> {
        check_tradeoff(self.alpha, self.beta_value())
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        if !(self.alpha > T::zero()) || !(self.beta_value() > T::zero()) {
            return Err(Error::InvalidArgument("alpha and beta must be > 0".into()));
        }
        if !(self.averaging_c > T::zero() && self.averaging_c <= T::one()) {
            return Err(Error::InvalidArgument(format!(
                "averaging_c must lie in (0, 1], got {}",
                self.averaging_c
            )));
        }
        if let StepSchedule::CustomList { values } = &self.step {
            if values.len() != self.epochs {
                return Err(Error::InvalidArgument(format!(
                    "custom step list has {} entries for K = {}",
                    values.len(),
                    self.epochs
                )));
            }
        }
        Ok(())
    }

    pub fn initial_point(&self, problem: &FiniteSumProblem<T>) -> Result<Vec<T>> {
        match &self.x0 {
            Some(x) => {
                problem.check_dim(x)?;
                Ok(x.clone())
            }
            None => Ok(vec![T::zero(); problem.dim()]),
        }
    }

    /// `‖x₀ − x*‖`, or the configured radius when `x*` is unknown.
    pub fn initial_distance(&self, problem: &FiniteSumProblem<T>) -> Result<T> {
        let x0 = self.initial_point(problem)?;
        match problem.x_star() {
            Ok(xs) => Ok(linalg::dist(&x0, xs)),
            Err(e) => self.radius.ok_or(e),
        }
    }

    /// Resolves `η_1..η_K`.
    pub fn resolve_steps(&self, problem: &FiniteSumProblem<T>) -> Result<Vec<T>> {
        self.validate()?;
        let k = self.epochs;
        let t = T::of_usize(problem.num_components());
        let steps = match &self.step {
            StepSchedule::Constant { value } => vec![*value; k],
            StepSchedule::CustomList { values } => values.clone(),
            StepSchedule::Theorem1 | StepSchedule::Theorem2 => {
                self.check_tradeoff()?;
                let l = problem.smoothness()?;
                let sigma_sq = problem
                    .meta()
                    .sigma_star_sq
                    .ok_or(Error::UnknownConstant("sigma_star_sq"))?;
                let r = self.initial_distance(problem)?;
                vec![
                    theorem1_step(r, sigma_sq, l, t, k, self.alpha, self.beta_value());
                    k
                ]
            }
            StepSchedule::Theorem3 | StepSchedule::Theorem4 => {
                let g = problem.lipschitz()?;
                let r = self.initial_distance(problem)?;
                vec![theorem3_step(r, g, t, k); k]
            }
        };
        if let Some((i, bad)) = steps
            .iter()
            .enumerate()
            .find(|(_, s)| !(**s > T::zero()) || !s.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "step size at epoch {} must be positive and finite, got {bad}",
                i + 1
            )));
        }
        if self.enforce_step_cap && problem.is_smooth() {
            let cap = step_cap(problem.smoothness()?, t, self.beta_value());
            let tol = T::one() + T::of(1e-12);
            if let Some((i, s)) = steps.iter().enumerate().find(|(_, s)| **s > cap * tol) {
                return Err(Error::StepCapViolated {
                    step: s.as_f64(),
                    cap: cap.as_f64(),
                    epoch: i + 1,
                });
            }
        }
        Ok(steps)
    }

    /// Resolves the per-slot budgets `ε_{k−1,t}` (`K × T`).
    pub fn resolve_eps(&self, problem: &FiniteSumProblem<T>) -> Result<Vec<Vec<T>>> {
        let k = self.epochs;
        let t = problem.num_components();
        let table = match &self.eps {
            EpsSchedule::None => vec![vec![T::zero(); t]; k],
            EpsSchedule::Constant { value } => vec![vec![*value; t]; k],
            EpsSchedule::Theorem4 => {
                let r = self.initial_distance(problem)?;
                let e = r / (T::of_usize(t) * T::of_usize(k).sqrt());
                vec![vec![e; t]; k]
            }
            EpsSchedule::PerSlot { values } => {
                if values.len() != k || values.iter().any(|row| row.len() != t) {
                    return Err(Error::InvalidArgument(format!(
                        "per-slot eps table must be {k} x {t}"
                    )));
                }
                values.clone()
            }
        };
        if table.iter().flatten().any(|e| !(*e >= T::zero())) {
            return Err(Error::InvalidArgument("eps budgets must be >= 0".into()));
        }
        Ok(table)
    }
}

/// `4·max(ln K, 1)`.
pub fn four_log_k<T: Scalar>(k: usize) -> T {
    T::of(4.0) * T::of_usize(k).ln().max(T::one())
}

pub fn check_tradeoff<T: Scalar>(alpha: T, beta: T) -> Result<()> {
    let lhs = T::one() / alpha + T::one() / beta;
    if lhs <= T::half() * (T::one() + T::of(1e-12)) {
        Ok(())
    } else {
        Err(Error::InvalidTradeoff {
            alpha: alpha.as_f64(),
            beta: beta.as_f64(),
        })
    }
}

/// `1/(√β T L)`.
pub fn step_cap<T: Scalar>(l: T, t: T, beta: T) -> T {
    T::one() / (beta.sqrt() * t * l)
}

/// Step used by the smooth last-iterate theorems. Falls back to the cap when
/// the variance term is absent (`σ* = 0`) or the initial distance is zero.
pub fn theorem1_step<T: Scalar>(r: T, sigma_sq: T, l: T, t: T, k: usize, alpha: T, beta: T) -> T {
    let cap = step_cap(l, t, beta);
    if sigma_sq == T::zero() || r == T::zero() {
        return cap;
    }
    let third = T::one() / T::of(3.0);
    let denom = T::two().powf(third)
        * t
        * sigma_sq.powf(third)
        * l.powf(third)
        * T::of_usize(k).powf(third)
        * (T::one() + beta / alpha).powf(third);
    (r.powf(T::two() * third) / denom).min(cap)
}

/// `R/(G T √K)`.
pub fn theorem3_step<T: Scalar>(r: T, g: T, t: T, k: usize) -> T {
    r / (g * t * T::of_usize(k).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_quadratic_suite;

    #[test]
    fn four_log_k_has_floor() {
        assert_eq!(four_log_k::<f64>(1), 4.0);
        assert_eq!(four_log_k::<f64>(2), 4.0);
        assert!((four_log_k::<f64>(256) - 4.0 * 256f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn tradeoff_condition() {
        assert!(check_tradeoff(4.0, 4.0).is_ok());
        assert!(check_tradeoff(4.0, 4.0 * 2f64.ln()).is_err());
        assert!(check_tradeoff(3.0, 6.0).is_ok());
    }

    #[test]
    fn theorem1_step_without_variance_is_the_cap() {
        let s = theorem1_step(1.0, 0.0, 2.0, 10.0, 64, 4.0, 16.0);
        assert_eq!(s, 1.0 / (4.0 * 10.0 * 2.0));
    }

    #[test]
    fn theorem1_step_matches_formula() {
        let (r, s2, l, t, k, a, b): (f64, f64, f64, f64, usize, f64, f64) = (2.0, 0.5, 3.0, 5.0, 1000, 4.0, 20.0);
        let want = (r.powf(2.0 / 3.0)
            / (2f64.cbrt() * t * s2.cbrt() * l.cbrt() * (k as f64).cbrt() * (1.0 + b / a).cbrt()))
        .min(1.0 / (b.sqrt() * t * l));
        let got = theorem1_step(r, s2, l, t, k, a, b);
        assert!((got - want).abs() <= 1e-15 * want);
    }

    #[test]
    fn constant_step_above_cap_is_rejected() {
        let p = make_quadratic_suite::<f64>(3, 4, 1.0, 2.0, 1).unwrap();
        let cap = step_cap(p.smoothness().unwrap(), 4.0, four_log_k(16));
        let cfg = RunConfig::new(Method::Igd, 16).with_step(StepSchedule::Constant { value: 2.0 * cap });
        let err = cfg.resolve_steps(&p).unwrap_err();
        assert!(matches!(err, Error::StepCapViolated { epoch: 1, .. }));
        assert!(err.to_string().contains("lemma1"));
        let mut relaxed = cfg.clone();
        relaxed.enforce_step_cap = false;
        assert!(relaxed.resolve_steps(&p).is_ok());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = RunConfig::<f64>::new(Method::IpInexact, 8)
            .with_eps(EpsSchedule::Constant { value: 0.25 })
            .with_ordering(Ordering::RandomReshuffle);
        let s = serde_json::to_string(&cfg).unwrap();
        assert!(s.contains("\"beta\":\"4lnK\""));
        assert!(s.contains("\"random-reshuffle\""));
        let back: RunConfig<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
        let fixed = RunConfig::<f64> {
            beta: Beta::Value(10.0),
            ..cfg
        };
        let back: RunConfig<f64> = serde_json::from_str(&serde_json::to_string(&fixed).unwrap()).unwrap();
        assert_eq!(back.beta_value(), 10.0);
    }

    #[test]
    fn custom_list_length_is_checked() {
        let p = make_quadratic_suite::<f64>(2, 2, 0.0, 1.0, 1).unwrap();
        let cfg = RunConfig::new(Method::Igd, 3).with_step(StepSchedule::CustomList { values: vec![1e-3; 2] });
        assert!(matches!(cfg.resolve_steps(&p), Err(Error::InvalidArgument(_))));
    }
}
