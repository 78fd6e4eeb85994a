//! Proximal operators `prox_{ηf}(x) = argmin_y { f(y) + ‖y − x‖²/(2η) }`.
//!
//! Closed forms exist for quadratic, scaled-absolute and hinge components.
//! [`prox_inexact`] returns a point `x⁺` together with a certified `ε` such that
//! `(x − x⁺)/η ∈ ∂_{ε²/(2η)} f(x⁺)`, which in turn gives
//! `‖x⁺ − prox_{ηf}(x)‖ ≤ ε`.
//!
//! The inexact solvers maintain a global linear minorant `ℓ ≤ f` built from
//! the inner iterates, take `s = ∇ℓ` and return `x⁺ = x − ηs`. Since
//! `f(z) ≥ ℓ(z) = ℓ(x⁺) + ⟨s, z − x⁺⟩`, the inclusion holds with
//! `ε²/(2η) = f(x⁺) − ℓ(x⁺)`.

use crate::error::{Error, Result};
use crate::linalg;
use crate::problems::{Component, ComponentKind};
use crate::rng::SeededRng;
use crate::scalar::Scalar;

pub const DEFAULT_INNER_ITERATION_CAP: usize = 10_000_000;

/// Budget used by [`moreau_gradient`] when no closed form exists.
const MOREAU_BUDGET: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ProxResult<T> {
    pub x_plus: Vec<T>,
    /// `(x − x⁺)/η`
    pub implied_subgradient: Vec<T>,
    pub certified_epsilon: T,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InexactOptions {
    pub max_iterations: usize,
}

impl Default for InexactOptions {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_INNER_ITERATION_CAP,
        }
    }
}

pub fn has_closed_form<T: Scalar>(component: &Component<T>) -> bool {
    !matches!(component.kind(), ComponentKind::LogisticL2 { .. })
}

fn check_inputs<T: Scalar>(component: &Component<T>, x: &[T], eta: T) -> Result<()> {
    if x.len() != component.dim() {
        return Err(Error::DimensionMismatch {
            expected: component.dim(),
            got: x.len(),
        });
    }
    if !(eta > T::zero()) || !eta.is_finite() {
        return Err(Error::InvalidArgument(format!("step must be > 0, got {eta}")));
    }
    Ok(())
}

fn result<T: Scalar>(x: &[T], x_plus: Vec<T>, eta: T, eps: T, iters: usize) -> ProxResult<T> {
    let implied_subgradient = linalg::scale(&linalg::sub(x, &x_plus), T::one() / eta);
    ProxResult {
        x_plus,
        implied_subgradient,
        certified_epsilon: eps,
        inner_iterations: iters,
    }
}

/// Closed-form proximal step.
pub fn prox_exact<T: Scalar>(component: &Component<T>, x: &[T], eta: T) -> Result<ProxResult<T>> {
    check_inputs(component, x, eta)?;
    let x_plus = match component.kind() {
        ComponentKind::Quadratic { a, b } => {
            let chol = component.factor_cache().get_or_insert_with(eta, || {
                let mut h = component.gram().expect("quadratic caches its Gram matrix").clone();
                h.add_diagonal(T::one() / eta);
                linalg::Cholesky::factor(&h)
            })?;
            let mut rhs = a.tr_mul_vec(b);
            linalg::axpy(T::one() / eta, x, &mut rhs);
            chol.solve(&rhs)
        }
        ComponentKind::ScaledAbsolute {
            direction,
            offset,
            scale,
        } => {
            let an = linalg::norm_sq(direction);
            if an == T::zero() || *scale == T::zero() {
                x.to_vec()
            } else {
                let r = linalg::dot(direction, x) - *offset;
                let tau = eta * *scale * an;
                let shrunk = r.signum() * (r.abs() - tau).max(T::zero());
                let mut xp = x.to_vec();
                linalg::axpy((shrunk - r) / an, direction, &mut xp);
                xp
            }
        }
        ComponentKind::Hinge { feature, label } => {
            let an = linalg::norm_sq(feature);
            if an == T::zero() {
                x.to_vec()
            } else {
                let margin = T::one() - *label * linalg::dot(feature, x);
                let theta = (margin / (eta * an)).max(T::zero()).min(T::one());
                let mut xp = x.to_vec();
                linalg::axpy(eta * theta * *label, feature, &mut xp);
                xp
            }
        }
        ComponentKind::LogisticL2 { .. } => {
            return Err(Error::NoClosedForm {
                kind: component.kind_name(),
            })
        }
    };
    Ok(result(x, x_plus, eta, T::zero(), 0))
}

/// Inexact proximal step with `certified_epsilon ≤ eps_budget`, using the
/// default inner iteration cap.
pub fn prox_inexact<T: Scalar>(
    component: &Component<T>,
    x: &[T],
    eta: T,
    eps_budget: T,
) -> Result<ProxResult<T>> {
    prox_inexact_with(component, x, eta, eps_budget, InexactOptions::default())
}

pub fn prox_inexact_with<T: Scalar>(
    component: &Component<T>,
    x: &[T],
    eta: T,
    eps_budget: T,
    options: InexactOptions,
) -> Result<ProxResult<T>> {
    check_inputs(component, x, eta)?;
    if !(eps_budget >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "eps_budget must be >= 0, got {eps_budget}"
        )));
    }
    if eps_budget == T::zero() && has_closed_form(component) {
        return prox_exact(component, x, eta);
    }
    if component.is_smooth() {
        smooth_inner(component, x, eta, eps_budget, options)
    } else {
        nonsmooth_inner(component, x, eta, eps_budget, options)
    }
}

/// Gradient descent on the prox objective with step `1/(L + 1/η)`. The
/// minorant at iterate `y` is the linearization of `f` at `y`, and
/// `ε = √(ηL)‖x⁺ − y‖` bounds `√(2η(f(x⁺) − ℓ(x⁺)))` by smoothness.
fn smooth_inner<T: Scalar>(
    component: &Component<T>,
    x: &[T],
    eta: T,
    budget: T,
    options: InexactOptions,
) -> Result<ProxResult<T>> {
    let l = component.smoothness().expect("smooth component");
    let h = T::one() / (l + T::one() / eta);
    let root = (eta * l).sqrt();
    let mut y = x.to_vec();
    let mut best = T::infinity();
    for iter in 0..=options.max_iterations {
        let grad = component.gradient(&y).expect("smooth component");
        let mut x_plus = x.to_vec();
        linalg::axpy(-eta, &grad, &mut x_plus);
        let eps = root * linalg::dist(&x_plus, &y);
        best = best.min(eps);
        if eps <= budget && budget > T::zero() {
            return Ok(result(x, x_plus, eta, eps, iter));
        }
        // ∇φ(y) = ∇f(y) + (y − x)/η = (y − x⁺)/η
        let step = linalg::scale(&linalg::sub(&y, &x_plus), h / eta);
        let next = linalg::sub(&y, &step);
        if next == y {
            return Err(unreachable_budget(budget, best, iter));
        }
        y = next;
    }
    Err(unreachable_budget(budget, best, options.max_iterations))
}

/// Subgradient descent on the prox objective with steps `2η/(j+2)`; the
/// minorant is the `(j+1)`-weighted average of the linearizations at every
/// inner iterate.
fn nonsmooth_inner<T: Scalar>(
    component: &Component<T>,
    x: &[T],
    eta: T,
    budget: T,
    options: InexactOptions,
) -> Result<ProxResult<T>> {
    let d = x.len();
    let mut y = x.to_vec();
    // ℓ(z) = c0 + ⟨s_sum, z⟩ scaled by 1/w_sum
    let mut s_sum = vec![T::zero(); d];
    let mut c0 = T::zero();
    let mut w_sum = T::zero();
    let mut best = T::infinity();
    for iter in 0..=options.max_iterations {
        let s = component.subgradient(&y);
        let w = T::of_usize(iter + 1);
        linalg::axpy(w, &s, &mut s_sum);
        c0 = c0 + w * (component.value(&y) - linalg::dot(&s, &y));
        w_sum = w_sum + w;

        let s_bar = linalg::scale(&s_sum, T::one() / w_sum);
        let mut x_plus = x.to_vec();
        linalg::axpy(-eta, &s_bar, &mut x_plus);
        let minorant = c0 / w_sum + linalg::dot(&s_bar, &x_plus);
        let delta = (component.value(&x_plus) - minorant).max(T::zero());
        let eps = (T::two() * eta * delta).sqrt();
        best = best.min(eps);
        if eps <= budget && budget > T::zero() {
            return Ok(result(x, x_plus, eta, eps, iter));
        }
        // ∂φ(y) ∋ s + (y − x)/η
        let step = T::two() * eta / T::of_usize(iter + 2);
        let mut dir = linalg::scale(&linalg::sub(&y, x), T::one() / eta);
        linalg::axpy(T::one(), &s, &mut dir);
        linalg::axpy(-step, &dir, &mut y);
    }
    Err(unreachable_budget(budget, best, options.max_iterations))
}

fn unreachable_budget<T: Scalar>(budget: T, best: T, iterations: usize) -> Error {
    Error::BudgetUnreachable {
        budget: budget.as_f64(),
        best: best.as_f64(),
        iterations,
    }
}

/// Sampled check of `g ∈ ∂_{ε²/(2η)} f(x⁺)`: tests
/// `f(y) ≥ f(x⁺) + ⟨g, y − x⁺⟩ − ε²/(2η)` at `probes` points drawn uniformly
/// from the ball of radius `10·max(1, ‖x⁺‖)` around `x⁺`.
pub fn certify_inexact<T: Scalar>(
    component: &Component<T>,
    x_plus: &[T],
    g: &[T],
    eps: T,
    eta: T,
    probes: usize,
    seed: u64,
) -> bool {
    let mut rng = SeededRng::new(seed);
    let d = x_plus.len();
    let radius = T::of(10.0) * T::one().max(linalg::norm(x_plus));
    let f_plus = component.value(x_plus);
    let slack = eps * eps / (T::two() * eta);
    let tol = T::of(1e-12);
    (0..probes.max(1)).all(|_| {
        let y = linalg::add(x_plus, &rng.ball_point(d, radius));
        let lhs = component.value(&y);
        let rhs = f_plus + linalg::dot(g, &linalg::sub(&y, x_plus)) - slack;
        lhs >= rhs - tol * T::one().max(lhs.abs()).max(rhs.abs())
    })
}

/// `∇M_{ηf}(x) = (x − prox_{ηf}(x))/η`.
pub fn moreau_gradient<T: Scalar>(component: &Component<T>, x: &[T], eta: T) -> Result<Vec<T>> {
    let r = if has_closed_form(component) {
        prox_exact(component, x, eta)?
    } else {
        prox_inexact(component, x, eta, T::of(MOREAU_BUDGET))?
    };
    Ok(r.implied_subgradient)
}

/// `M_{ηf}(x) = min_y { f(y) + ‖y − x‖²/(2η) }`.
pub fn moreau_envelope<T: Scalar>(component: &Component<T>, x: &[T], eta: T) -> Result<T> {
    let r = if has_closed_form(component) {
        prox_exact(component, x, eta)?
    } else {
        prox_inexact(component, x, eta, T::of(MOREAU_BUDGET))?
    };
    Ok(component.value(&r.x_plus) + linalg::dist_sq(&r.x_plus, x) / (T::two() * eta))
}
