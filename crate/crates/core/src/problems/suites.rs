//! Seeded problem generators with a known minimizer.

use super::{Component, FiniteSumProblem, ProblemMeta, Provenance};
use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky, Matrix};
use crate::rng::SeededRng;
use crate::scalar::Scalar;

const QUADRATIC_STREAM: u64 = 0x5155_4144;
const LIPSCHITZ_STREAM: u64 = 0x4c49_5053;

/// Quadratic components `½‖A_t x − b_t‖²` (each `A_t` is `d×d`) with
/// `∇f(x*) = 0` exactly and `σ*² = sigma_target`.
///
/// Singular values of each `A_t` are log-uniform in
/// `[1/√condition, √condition]`. Residuals `r_t = b_t − A_t x*` are Gaussian,
/// projected onto `{Σ_t A_tᵀ r_t = 0}` and rescaled.
pub fn make_quadratic_suite<T: Scalar>(
    d: usize,
    t: usize,
    sigma_target: T,
    condition: T,
    seed: u64,
) -> Result<FiniteSumProblem<T>> {
    if d == 0 || t == 0 {
        return Err(Error::InvalidArgument("d and T must be at least 1".into()));
    }
    if !(condition >= T::one()) {
        return Err(Error::InvalidArgument(format!(
            "condition must be >= 1, got {condition}"
        )));
    }
    if !(sigma_target >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "sigma_target must be >= 0, got {sigma_target}"
        )));
    }
    let mut rng = SeededRng::derived(seed, QUADRATIC_STREAM);
    let x_star: Vec<T> = rng.normal_vec(d);
    let half_log = 0.5 * condition.as_f64().ln();

    let mut mats = Vec::with_capacity(t);
    for _ in 0..t {
        let u = rng.orthogonal::<T>(d)?;
        let v = rng.orthogonal::<T>(d)?;
        let s: Vec<T> = (0..d)
            .map(|_| rng.uniform::<T>(-half_log, half_log).exp())
            .collect();
        mats.push(u.matmul(&Matrix::diagonal(&s)).matmul(&v.transpose()));
    }

    let residuals = if sigma_target == T::zero() {
        vec![vec![T::zero(); d]; t]
    } else {
        let mut r: Vec<Vec<T>> = (0..t).map(|_| rng.normal_vec(d)).collect();
        project_residuals(&mats, &mut r)?;
        let spread: T = mats
            .iter()
            .zip(&r)
            .map(|(a, rt)| linalg::norm_sq(&a.tr_mul_vec(rt)))
            .sum::<T>()
            / T::of_usize(t);
        if !(spread > T::of(1e-20)) {
            return Err(Error::DegenerateConstruction(format!(
                "no nonzero residual satisfies the optimality constraint for d = {d}, T = {t}"
            )));
        }
        let k = (sigma_target / spread).sqrt();
        r.iter().map(|rt| linalg::scale(rt, k)).collect()
    };

    let components = mats
        .into_iter()
        .zip(residuals)
        .map(|(a, r)| {
            let b = linalg::add(&a.mul_vec(&x_star), &r);
            Component::quadratic(a, b)
        })
        .collect::<Result<Vec<_>>>()?;
    FiniteSumProblem::new(components)?
        .with_minimizer(x_star)
        .map(|p| p.with_provenance(Provenance::Constructed))
}

/// `r ← r − M ᵀ(Σ A_tᵀA_t)⁻¹ M r` with `M r = Σ_t A_tᵀ r_t`; afterwards
/// `Σ_t A_tᵀ r_t = 0`.
fn project_residuals<T: Scalar>(mats: &[Matrix<T>], r: &mut [Vec<T>]) -> Result<()> {
    let d = mats[0].cols();
    let mut h = Matrix::zeros(d, d);
    let mut m = vec![T::zero(); d];
    for (a, rt) in mats.iter().zip(r.iter()) {
        let g = a.gram();
        for i in 0..d {
            for j in 0..d {
                h[(i, j)] = h[(i, j)] + g[(i, j)];
            }
        }
        linalg::axpy(T::one(), &a.tr_mul_vec(rt), &mut m);
    }
    let lambda = Cholesky::factor(&h)?.solve(&m);
    for (a, rt) in mats.iter().zip(r.iter_mut()) {
        let correction = a.mul_vec(&lambda);
        linalg::axpy(-T::one(), &correction, rt);
    }
    Ok(())
}

/// Scaled-absolute components `g_t|⟨a_t,x⟩ − b_t|` with `max_t g_t‖a_t‖ = G`
/// and a sharp, certified minimizer `x*`.
///
/// Roughly half the components are kinked at `x*`; the rest are offset from it
/// and pull in fixed directions. The first kinked component points against
/// the total pull `P` and absorbs it with subgradient coefficient
/// `‖P‖/G ≤ 1/2`, so `x*` stays a minimizer under small perturbations and
/// `f` grows linearly away from it. The coefficients are stored in
/// `meta.certificate`.
pub fn make_lipschitz_suite<T: Scalar>(
    d: usize,
    t: usize,
    g_max: T,
    seed: u64,
) -> Result<FiniteSumProblem<T>> {
    if t < 2 {
        return Err(Error::DegenerateConstruction(
            "at least two components are needed to certify a minimizer".into(),
        ));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("d must be at least 1".into()));
    }
    if !(g_max > T::zero()) {
        return Err(Error::InvalidArgument(format!("G must be > 0, got {g_max}")));
    }
    let mut rng = SeededRng::derived(seed, LIPSCHITZ_STREAM);
    let x_star: Vec<T> = rng.normal_vec(d);
    let n_pull = t / 2;
    let n_kink = t - n_pull;

    struct Pull<T> {
        a: Vec<T>,
        g: T,
        sign: T,
        distance: T,
    }
    let mut pulls = Vec::with_capacity(n_pull);
    for _ in 0..n_pull {
        let rho: T = rng.uniform(0.5, 2.0);
        let size: T = rng.uniform(0.5, 1.0);
        let distance: T = rng.uniform(0.5, 1.5);
        let sign = T::of(rng.sign() as f64);
        let a = linalg::scale(&rng.unit_vec::<T>(d), rho);
        pulls.push(Pull {
            a,
            g: size / rho,
            sign,
            distance,
        });
    }
    let mut pull_sum = vec![T::zero(); d];
    for p in &pulls {
        linalg::axpy(p.sign * p.g, &p.a, &mut pull_sum);
    }
    let pull_norm = linalg::norm(&pull_sum);
    let max_size = pulls
        .iter()
        .map(|p| p.g * linalg::norm(&p.a))
        .fold(T::zero(), T::max);
    let mut s = if max_size > T::zero() {
        g_max / max_size
    } else {
        T::one()
    };
    if pull_norm > T::zero() {
        s = s.min(T::half() * g_max / pull_norm);
    }
    for p in &mut pulls {
        p.g = p.g * s;
    }
    let pull_norm = pull_norm * s;

    let mut kinks: Vec<(Vec<T>, T, T)> = Vec::with_capacity(n_kink);
    let degenerate_pull = !(pull_norm > T::of(1e-12) * g_max);
    for i in 0..n_kink {
        let rho: T = rng.uniform(0.5, 2.0);
        let (dir, size, theta) = if i == 0 {
            if degenerate_pull {
                (rng.unit_vec::<T>(d), g_max, T::zero())
            } else {
                let dir = linalg::scale(&pull_sum, -s / pull_norm);
                (dir, g_max, pull_norm / g_max)
            }
        } else {
            let size: T = rng.uniform(0.5, 1.0);
            (rng.unit_vec::<T>(d), size * g_max, T::zero())
        };
        kinks.push((linalg::scale(&dir, rho), size / rho, theta));
    }

    let mut components = Vec::with_capacity(t);
    let mut certificate = Vec::with_capacity(t);
    let mut kinks = kinks.into_iter();
    let mut pulls = pulls.into_iter();
    for i in 0..t {
        let take_kink = i % 2 == 0 || pulls.len() == 0;
        if take_kink {
            if let Some((a, g, theta)) = kinks.next() {
                let b = linalg::dot(&a, &x_star);
                components.push(Component::scaled_absolute(a, b, g)?);
                certificate.push(theta);
                continue;
            }
        }
        let p = pulls.next().expect("component counts add up to T");
        let b = linalg::dot(&p.a, &x_star) - p.sign * p.distance * linalg::norm(&p.a);
        components.push(Component::scaled_absolute(p.a, b, p.g)?);
        certificate.push(p.sign);
    }

    let f_star = {
        let p = FiniteSumProblem::new(components.clone())?;
        p.objective(&x_star)
    };
    let problem = FiniteSumProblem::new(components)?;
    let meta = ProblemMeta {
        x_star: Some(x_star),
        f_star: Some(f_star),
        sigma_star_sq: None,
        smoothness: None,
        lipschitz: problem.meta().lipschitz,
        provenance: Provenance::Constructed,
        certificate: Some(certificate),
    };
    FiniteSumProblem::from_parts(problem.components().to_vec(), meta)
}
