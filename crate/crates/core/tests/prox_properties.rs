use lastiter::linalg::{self, Matrix};
use lastiter::prox::{certify_inexact, moreau_gradient};
use lastiter::{prox_exact, prox_inexact, Component, ComponentKind};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

fn config(cases: u32) -> Config {
    Config {
        cases,
        rng_seed: RngSeed::Fixed(0x5052_4f58),
        failure_persistence: None,
        ..Config::default()
    }
}

fn vec_in(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, d)
}

/// Closed-form kinds of dimension `d`.
fn closed_form_component(d: usize) -> impl Strategy<Value = Component<f64>> {
    prop_oneof![
        (prop::collection::vec(-2.0..2.0f64, d * d), vec_in(d)).prop_map(move |(a, b)| {
            Component::quadratic(Matrix::from_row_major(d, d, a).unwrap(), b).unwrap()
        }),
        (vec_in(d), -2.0..2.0f64, 0.1..3.0f64)
            .prop_map(|(a, off, g)| Component::scaled_absolute(a, off, g).unwrap()),
        (vec_in(d), prop::bool::ANY)
            .prop_map(|(a, pos)| Component::hinge(a, if pos { 1.0 } else { -1.0 }).unwrap()),
    ]
}

fn case() -> impl Strategy<Value = (Component<f64>, Vec<f64>, Vec<f64>, f64)> {
    (1usize..5).prop_flat_map(|d| (closed_form_component(d), vec_in(d), vec_in(d), 1e-3..10.0f64))
}

fn prox_objective(c: &Component<f64>, x: &[f64], eta: f64, y: &[f64]) -> f64 {
    c.value(y) + linalg::dist_sq(y, x) / (2.0 * eta)
}

/// Bisection on the right derivative of `τ ↦ prox objective at x + τa`,
/// whose zero crossing is the prox of a ridge function `h(⟨a, ·⟩)`.
/// `slope(u)` is the right derivative of `h` at `u`.
fn ridge_prox_oracle(a: &[f64], x: &[f64], eta: f64, slope: impl Fn(f64) -> f64, max_slope: f64) -> Vec<f64> {
    let an = linalg::norm_sq(a);
    let u0 = linalg::dot(a, x);
    let right = |tau: f64| an * slope(u0 + tau * an) + tau * an / eta;
    let reach = 2.0 * eta * max_slope + 1.0;
    let (mut lo, mut hi) = (-reach, reach);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if right(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut y = x.to_vec();
    linalg::axpy(hi, a, &mut y);
    y
}

/// Conjugate gradients on `(I/η + AᵀA) y = x/η + Aᵀb`.
fn quadratic_prox_oracle(a: &Matrix<f64>, b: &[f64], x: &[f64], eta: f64) -> Vec<f64> {
    let apply = |v: &[f64]| {
        let mut out = a.tr_mul_vec(&a.mul_vec(v));
        linalg::axpy(1.0 / eta, v, &mut out);
        out
    };
    let mut rhs = a.tr_mul_vec(b);
    linalg::axpy(1.0 / eta, x, &mut rhs);
    let mut y = x.to_vec();
    let mut r = linalg::sub(&rhs, &apply(&y));
    let mut p = r.clone();
    for _ in 0..200 {
        let rr = linalg::norm_sq(&r);
        if rr.sqrt() <= 1e-14 * (1.0 + linalg::norm(&rhs)) {
            break;
        }
        let ap = apply(&p);
        let alpha = rr / linalg::dot(&p, &ap);
        linalg::axpy(alpha, &p, &mut y);
        linalg::axpy(-alpha, &ap, &mut r);
        let beta = linalg::norm_sq(&r) / rr;
        p = linalg::add(&r, &linalg::scale(&p, beta));
    }
    y
}

fn oracle(c: &Component<f64>, x: &[f64], eta: f64) -> Vec<f64> {
    match c.kind() {
        ComponentKind::Quadratic { a, b } => quadratic_prox_oracle(a, b, x, eta),
        ComponentKind::ScaledAbsolute { direction, offset, scale } => {
            let (b, g) = (*offset, *scale);
            ridge_prox_oracle(direction, x, eta, |u| if u >= b { g } else { -g }, g)
        }
        ComponentKind::Hinge { feature, label } => {
            let y = *label;
            let slope = |u: f64| {
                let m = 1.0 - y * u;
                if m > 0.0 || (m == 0.0 && y < 0.0) {
                    -y
                } else {
                    0.0
                }
            };
            ridge_prox_oracle(feature, x, eta, slope, 1.0)
        }
        ComponentKind::LogisticL2 { .. } => unreachable!(),
    }
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn firmly_nonexpansive((c, x, y, eta) in case()) {
        let px = prox_exact(&c, &x, eta).unwrap().x_plus;
        let py = prox_exact(&c, &y, eta).unwrap().x_plus;
        let diff = linalg::sub(&px, &py);
        let lhs = linalg::norm_sq(&diff);
        let rhs = linalg::dot(&diff, &linalg::sub(&x, &y));
        prop_assert!(lhs <= rhs + 1e-12 * (1.0 + rhs.abs()), "{lhs} > {rhs}");
    }

    #[test]
    fn moreau_gradient_is_lipschitz((c, x, y, eta) in case()) {
        let gx = moreau_gradient(&c, &x, eta).unwrap();
        let gy = moreau_gradient(&c, &y, eta).unwrap();
        let lhs = linalg::dist(&gx, &gy);
        let rhs = linalg::dist(&x, &y) / eta;
        prop_assert!(lhs <= rhs + 1e-12 * (1.0 + rhs), "{lhs} > {rhs}");
    }

    #[test]
    fn closed_form_matches_independent_solver((c, x, _y, eta) in case()) {
        let ours = prox_exact(&c, &x, eta).unwrap();
        let theirs = oracle(&c, &x, eta);
        let f_ours = prox_objective(&c, &x, eta, &ours.x_plus);
        let f_theirs = prox_objective(&c, &x, eta, &theirs);
        prop_assert!(f_ours <= f_theirs + 1e-12 * (1.0 + f_theirs.abs()));
        prop_assert!(linalg::dist(&ours.x_plus, &theirs) <= 1e-8 * (1.0 + linalg::norm(&theirs)));
        prop_assert!(f_ours <= prox_objective(&c, &x, eta, &x) + 1e-12);
        prop_assert_eq!(ours.certified_epsilon, 0.0);
    }

    #[test]
    fn backward_step_identity_on_quadratics((c, x, _y, eta) in case()) {
        prop_assume!(c.is_smooth());
        let r = prox_exact(&c, &x, eta).unwrap();
        let grad = c.gradient(&r.x_plus).unwrap();
        let g = &r.implied_subgradient;
        prop_assert!(linalg::dist(&grad, g) <= 1e-9 * linalg::norm(g).max(1.0));
    }

    #[test]
    fn inexact_steps_respect_the_distance_bound(
        (c, x, _y, eta) in case(),
        budget_exp in -5.0..-1.0f64,
        seed in 0u64..1000,
    ) {
        let budget = 10f64.powf(budget_exp);
        let r = prox_inexact(&c, &x, eta, budget).unwrap();
        prop_assert!(r.certified_epsilon <= budget);
        let exact = prox_exact(&c, &x, eta).unwrap().x_plus;
        prop_assert!(linalg::dist(&r.x_plus, &exact) <= r.certified_epsilon + 1e-12);
        prop_assert!(certify_inexact(&c, &r.x_plus, &r.implied_subgradient, r.certified_epsilon, eta, 200, seed));
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn logistic_certificate_holds_at_probe_points(
        a in vec_in(3),
        pos in prop::bool::ANY,
        ridge in 0.0..1.0f64,
        x in vec_in(3),
        eta in 0.01..5.0f64,
        seed in 0u64..1000,
    ) {
        let c = Component::logistic_l2(a, if pos { 1.0 } else { -1.0 }, ridge).unwrap();
        let r = prox_inexact(&c, &x, eta, 1e-4).unwrap();
        prop_assert!(r.certified_epsilon <= 1e-4);
        prop_assert!(certify_inexact(&c, &r.x_plus, &r.implied_subgradient, r.certified_epsilon, eta, 1000, seed));
    }

    #[test]
    fn moreau_gradient_of_scaled_absolute_is_bounded_by_g(
        a in vec_in(4),
        off in -2.0..2.0f64,
        g in 0.1..3.0f64,
        x in vec_in(4),
        eta in 1e-3..10.0f64,
    ) {
        let c = Component::scaled_absolute(a, off, g).unwrap();
        let grad = moreau_gradient(&c, &x, eta).unwrap();
        let bound = c.lipschitz().unwrap();
        prop_assert!(linalg::norm(&grad) <= bound * (1.0 + 1e-12) + 1e-15);
    }
}
