use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky, Matrix};
use crate::scalar::Scalar;

/// Parameters of one component function `f_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Scalar")]
pub enum ComponentKind<T> {
    /// `½‖A x − b‖²`
    Quadratic { a: Matrix<T>, b: Vec<T> },
    /// `g·|⟨a, x⟩ − b|`
    ScaledAbsolute {
        direction: Vec<T>,
        offset: T,
        scale: T,
    },
    /// `max(0, 1 − y⟨a, x⟩)` with `y ∈ {−1, +1}`
    Hinge { feature: Vec<T>, label: T },
    /// `log(1 + exp(−y⟨a, x⟩)) + (μ/2)‖x‖²`
    LogisticL2 { feature: Vec<T>, label: T, ridge: T },
}

/// Subdifferential of a nonsmooth ridge component at a point:
/// `{ c · vector : c ∈ [lo, hi] }`.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeSubdifferential<T> {
    pub vector: Vec<T>,
    pub lo: T,
    pub hi: T,
}

/// Cholesky factors of `I/η + AᵀA`, keyed by the bit pattern of `η`.
#[derive(Default)]
pub(crate) struct FactorCache<T> {
    map: RwLock<HashMap<u64, Arc<Cholesky<T>>>>,
}

impl<T: Scalar> FactorCache<T> {
    pub(crate) fn get_or_insert_with(
        &self,
        eta: T,
        build: impl FnOnce() -> Result<Cholesky<T>>,
    ) -> Result<Arc<Cholesky<T>>> {
        let key = eta.as_f64().to_bits();
        if let Some(f) = self.map.read().expect("factor cache poisoned").get(&key) {
            return Ok(Arc::clone(f));
        }
        let built = Arc::new(build()?);
        // Concurrent builders produce identical factors; keep whichever landed first.
        let mut w = self.map.write().expect("factor cache poisoned");
        Ok(Arc::clone(w.entry(key).or_insert(built)))
    }

    pub(crate) fn len(&self) -> usize {
        self.map.read().expect("factor cache poisoned").len()
    }
}

/// A component oracle: the component's parameters plus its cached smoothness
/// (`L_t`) or Lipschitz (`G_t`) constant.
#[derive(Serialize, Deserialize)]
#[serde(
    try_from = "ComponentKind<T>",
    into = "ComponentKind<T>",
    bound = "T: Scalar"
)]
pub struct Component<T: Scalar> {
    kind: ComponentKind<T>,
    constant: T,
    gram: Option<Matrix<T>>,
    cache: FactorCache<T>,
}

impl<T: Scalar> Component<T> {
    pub fn new(kind: ComponentKind<T>) -> Result<Self> {
        let (constant, gram) = match &kind {
            ComponentKind::Quadratic { a, b } => {
                if a.rows() != b.len() {
                    return Err(Error::DimensionMismatch {
                        expected: a.rows(),
                        got: b.len(),
                    });
                }
                let g = a.gram();
                (linalg::largest_eigenvalue(&g).max(T::zero()), Some(g))
            }
            ComponentKind::ScaledAbsolute {
                direction, scale, ..
            } => {
                if *scale < T::zero() {
                    return Err(Error::InvalidArgument(
                        "scaled-absolute scale must be nonnegative".into(),
                    ));
                }
                (*scale * linalg::norm(direction), None)
            }
            ComponentKind::Hinge { feature, label } => {
                check_label(*label)?;
                (linalg::norm(feature), None)
            }
            ComponentKind::LogisticL2 {
                feature,
                label,
                ridge,
            } => {
                check_label(*label)?;
                if *ridge < T::zero() {
                    return Err(Error::InvalidArgument(
                        "logistic ridge weight must be nonnegative".into(),
                    ));
                }
                (linalg::norm_sq(feature) / T::of(4.0) + *ridge, None)
            }
        };
        Ok(Self {
            kind,
            constant,
            gram,
            cache: FactorCache::default(),
        })
    }

    pub fn quadratic(a: Matrix<T>, b: Vec<T>) -> Result<Self> {
        Self::new(ComponentKind::Quadratic { a, b })
    }

    pub fn scaled_absolute(direction: Vec<T>, offset: T, scale: T) -> Result<Self> {
        Self::new(ComponentKind::ScaledAbsolute {
            direction,
            offset,
            scale,
        })
    }

    pub fn hinge(feature: Vec<T>, label: T) -> Result<Self> {
        Self::new(ComponentKind::Hinge { feature, label })
    }

    pub fn logistic_l2(feature: Vec<T>, label: T, ridge: T) -> Result<Self> {
        Self::new(ComponentKind::LogisticL2 {
            feature,
            label,
            ridge,
        })
    }

    pub fn kind(&self) -> &ComponentKind<T> {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ComponentKind::Quadratic { .. } => "quadratic",
            ComponentKind::ScaledAbsolute { .. } => "scaled_absolute",
            ComponentKind::Hinge { .. } => "hinge",
            ComponentKind::LogisticL2 { .. } => "logistic_l2",
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ComponentKind::Quadratic { a, .. } => a.cols(),
            ComponentKind::ScaledAbsolute { direction, .. } => direction.len(),
            ComponentKind::Hinge { feature, .. } | ComponentKind::LogisticL2 { feature, .. } => {
                feature.len()
            }
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(
            self.kind,
            ComponentKind::Quadratic { .. } | ComponentKind::LogisticL2 { .. }
        )
    }

    /// `L_t`, for smooth kinds.
    pub fn smoothness(&self) -> Option<T> {
        self.is_smooth().then_some(self.constant)
    }

    /// `G_t`, for Lipschitz kinds.
    pub fn lipschitz(&self) -> Option<T> {
        (!self.is_smooth()).then_some(self.constant)
    }

    /// `AᵀA` for quadratic components.
    pub fn gram(&self) -> Option<&Matrix<T>> {
        self.gram.as_ref()
    }

    pub fn value(&self, x: &[T]) -> T {
        debug_assert_eq!(x.len(), self.dim());
        match &self.kind {
            ComponentKind::Quadratic { a, b } => {
                let r = linalg::sub(&a.mul_vec(x), b);
                T::half() * linalg::norm_sq(&r)
            }
            ComponentKind::ScaledAbsolute {
                direction,
                offset,
                scale,
            } => *scale * (linalg::dot(direction, x) - *offset).abs(),
            ComponentKind::Hinge { feature, label } => {
                (T::one() - *label * linalg::dot(feature, x)).max(T::zero())
            }
            ComponentKind::LogisticL2 {
                feature,
                label,
                ridge,
            } => {
                let u = -*label * linalg::dot(feature, x);
                softplus(u) + T::half() * *ridge * linalg::norm_sq(x)
            }
        }
    }

    /// `∇f_t(x)`, or `None` for nonsmooth kinds.
    pub fn gradient(&self, x: &[T]) -> Option<Vec<T>> {
        debug_assert_eq!(x.len(), self.dim());
        match &self.kind {
            ComponentKind::Quadratic { a, b } => {
                let r = linalg::sub(&a.mul_vec(x), b);
                Some(a.tr_mul_vec(&r))
            }
            ComponentKind::LogisticL2 {
                feature,
                label,
                ridge,
            } => {
                let u = -*label * linalg::dot(feature, x);
                let coef = -*label * sigmoid(u);
                let mut g = linalg::scale(x, *ridge);
                linalg::axpy(coef, feature, &mut g);
                Some(g)
            }
            _ => None,
        }
    }

    /// Some element of `∂f_t(x)`: the gradient for smooth kinds, and the
    /// minimal-norm choice on kinks for nonsmooth ones.
    pub fn subgradient(&self, x: &[T]) -> Vec<T> {
        if let Some(g) = self.gradient(x) {
            return g;
        }
        let sd = self
            .ridge_subdifferential(x, T::zero())
            .expect("nonsmooth kinds are ridge functions");
        let c = if sd.lo > T::zero() {
            sd.lo
        } else if sd.hi < T::zero() {
            sd.hi
        } else {
            T::zero()
        };
        linalg::scale(&sd.vector, c)
    }

    /// Full subdifferential of a nonsmooth ridge component at `x`. Points with
    /// `|⟨a,x⟩ − kink| ≤ kink_tol` are treated as lying on the kink.
    pub fn ridge_subdifferential(&self, x: &[T], kink_tol: T) -> Option<RidgeSubdifferential<T>> {
        match &self.kind {
            ComponentKind::ScaledAbsolute {
                direction,
                offset,
                scale,
            } => {
                let r = linalg::dot(direction, x) - *offset;
                let (lo, hi) = if r.abs() <= kink_tol {
                    (-T::one(), T::one())
                } else {
                    let s = r.signum();
                    (s, s)
                };
                Some(RidgeSubdifferential {
                    vector: linalg::scale(direction, *scale),
                    lo,
                    hi,
                })
            }
            ComponentKind::Hinge { feature, label } => {
                let m = T::one() - *label * linalg::dot(feature, x);
                let (lo, hi) = if m.abs() <= kink_tol {
                    (-T::one(), T::zero())
                } else if m > T::zero() {
                    (-T::one(), -T::one())
                } else {
                    (T::zero(), T::zero())
                };
                Some(RidgeSubdifferential {
                    vector: linalg::scale(feature, *label),
                    lo,
                    hi,
                })
            }
            _ => None,
        }
    }

    pub(crate) fn factor_cache(&self) -> &FactorCache<T> {
        &self.cache
    }

    /// Number of cached `(component, η)` factorizations.
    pub fn cached_factorizations(&self) -> usize {
        self.cache.len()
    }
}

fn check_label<T: Scalar>(label: T) -> Result<()> {
    if label == T::one() || label == -T::one() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "label must be -1 or +1, got {label}"
        )))
    }
}

/// `log(1 + exp(u))` without overflow.
fn softplus<T: Scalar>(u: T) -> T {
    u.max(T::zero()) + (-u.abs()).exp().ln_1p()
}

fn sigmoid<T: Scalar>(u: T) -> T {
    if u >= T::zero() {
        T::one() / (T::one() + (-u).exp())
    } else {
        let e = u.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> Clone for Component<T> {
    fn clone(&self) -> Self {
        Self {
            kind: self.kind.clone(),
            constant: self.constant,
            gram: self.gram.clone(),
            cache: FactorCache::default(),
        }
    }
}

impl<T: Scalar> PartialEq for Component<T> {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl<T: Scalar> fmt::Debug for Component<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Component")
            .field("kind", &self.kind)
            .field("constant", &self.constant)
            .finish()
    }
}

impl<T: Scalar> TryFrom<ComponentKind<T>> for Component<T> {
    type Error = Error;
    fn try_from(kind: ComponentKind<T>) -> Result<Self> {
        Component::new(kind)
    }
}

impl<T: Scalar> From<Component<T>> for ComponentKind<T> {
    fn from(c: Component<T>) -> Self {
        c.kind
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_value_and_gradient() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        let c = Component::quadratic(a, vec![1.0, -1.0]).unwrap();
        // Ax - b at (1,1) = (3-1, 1+1) = (2, 2)
        assert_eq!(c.value(&[1.0, 1.0]), 4.0);
        assert_eq!(c.gradient(&[1.0, 1.0]).unwrap(), vec![2.0, 6.0]);
    }

    #[test]
    fn quadratic_smoothness_is_top_eigenvalue() {
        let a: Matrix<f64> = Matrix::diagonal(&[3.0, 0.5]);
        let c = Component::quadratic(a, vec![0.0, 0.0]).unwrap();
        assert!((c.smoothness().unwrap() - 9.0).abs() < 1e-12);
        assert!(c.lipschitz().is_none());
    }

    #[test]
    fn scaled_absolute_constants_and_subgradients() {
        let c = Component::scaled_absolute(vec![3.0, 4.0], 1.0, 2.0).unwrap();
        assert_eq!(c.lipschitz(), Some(10.0));
        assert_eq!(c.value(&[1.0, 0.0]), 4.0);
        assert_eq!(c.subgradient(&[1.0, 0.0]), vec![6.0, 8.0]);
        // kink: <a,x> = 1 -> minimal-norm subgradient is zero
        let on_kink = [1.0 / 3.0, 0.0];
        assert_eq!(c.subgradient(&on_kink), vec![0.0, 0.0]);
        assert!(c.gradient(&on_kink).is_none());
    }

    #[test]
    fn hinge_subdifferential_regions() {
        let c = Component::hinge(vec![1.0], 1.0).unwrap();
        assert_eq!(c.value(&[0.0]), 1.0);
        assert_eq!(c.subgradient(&[0.0]), vec![-1.0]);
        assert_eq!(c.subgradient(&[2.0]), vec![0.0]);
        let sd = c.ridge_subdifferential(&[1.0], 1e-12).unwrap();
        assert_eq!((sd.lo, sd.hi), (-1.0, 0.0));
    }

    #[test]
    fn hinge_rejects_bad_label() {
        assert!(matches!(
            Component::hinge(vec![1.0], 0.5),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn logistic_gradient_matches_central_difference() {
        let c: Component<f64> = Component::logistic_l2(vec![0.7, -1.2], -1.0, 0.3).unwrap();
        let x = [0.4, 0.9];
        let g = c.gradient(&x).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (c.value(&xp) - c.value(&xm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn softplus_is_stable_for_large_arguments() {
        assert_eq!(softplus(1000.0f64), 1000.0);
        assert!(softplus(-1000.0f64) >= 0.0);
    }

    #[test]
    fn kind_round_trips_through_json() {
        let c = Component::scaled_absolute(vec![0.1, 0.2], 0.3, 1.5).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"kind\":\"scaled_absolute\""));
        let back: Component<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.lipschitz(), c.lipschitz());
    }
}
