//! Convex finite-sum problems `f(x) = (1/T) Σ_t f_t(x)` with known minimizers.

mod component;
mod io;
mod suites;

use serde::{Deserialize, Serialize};

pub use component::{Component, ComponentKind, RidgeSubdifferential};
pub use io::PROBLEM_FORMAT_VERSION;
pub use suites::{make_lipschitz_suite, make_quadratic_suite};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Minimizer chosen first, data built around it.
    Constructed,
    /// Minimizer obtained by a numerical solve.
    Solved,
    /// Assembled by hand; metadata as given by the caller.
    Supplied,
}

/// What is known about a problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ProblemMeta<T> {
    pub x_star: Option<Vec<T>>,
    pub f_star: Option<T>,
    pub sigma_star_sq: Option<T>,
    /// `max_t L_t`, when every component is smooth.
    pub smoothness: Option<T>,
    /// `max_t G_t`, when every component is Lipschitz.
    pub lipschitz: Option<T>,
    pub provenance: Provenance,
    /// Subgradient coefficients `θ_t` certifying `0 ∈ ∂f(x*)` for ridge
    /// components (see [`FiniteSumProblem::verify_certificate`]).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Vec<T>>,
}

/// Value of `f` at a point together with every component value.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<T> {
    pub value: T,
    pub per_component: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "io::ProblemDocument<T>",
    into = "io::ProblemDocument<T>",
    bound = "T: Scalar"
)]
pub struct FiniteSumProblem<T: Scalar> {
    components: Vec<Component<T>>,
    dimension: usize,
    meta: ProblemMeta<T>,
}

impl<T: Scalar> FiniteSumProblem<T> {
    /// Builds a problem with nothing known beyond the uniform constants.
    pub fn new(components: Vec<Component<T>>) -> Result<Self> {
        let dimension = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("a problem needs at least one component".into()))?
            .dim();
        if dimension == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if let Some(c) = components.iter().find(|c| c.dim() != dimension) {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                got: c.dim(),
            });
        }
        let smoothness = uniform_constant(&components, Component::smoothness);
        let lipschitz = uniform_constant(&components, Component::lipschitz);
        Ok(Self {
            components,
            dimension,
            meta: ProblemMeta {
                x_star: None,
                f_star: None,
                sigma_star_sq: None,
                smoothness,
                lipschitz,
                provenance: Provenance::Supplied,
                certificate: None,
            },
        })
    }

    /// Records a known minimizer, filling in `f*` and, for smooth problems, `σ*²`.
    pub fn with_minimizer(mut self, x_star: Vec<T>) -> Result<Self> {
        self.check_dim(&x_star)?;
        self.meta.f_star = Some(self.objective(&x_star));
        self.meta.x_star = Some(x_star);
        self.meta.sigma_star_sq = self.sigma_star_sq().ok();
        Ok(self)
    }

    pub fn with_certificate(mut self, certificate: Vec<T>) -> Result<Self> {
        if certificate.len() != self.num_components() {
            return Err(Error::DimensionMismatch {
                expected: self.num_components(),
                got: certificate.len(),
            });
        }
        self.meta.certificate = Some(certificate);
        Ok(self)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.meta.provenance = provenance;
        self
    }

    pub(crate) fn from_parts(
        components: Vec<Component<T>>,
        meta: ProblemMeta<T>,
    ) -> Result<Self> {
        let mut p = Self::new(components)?;
        if let Some(x) = &meta.x_star {
            p.check_dim(x)?;
        }
        if let Some(c) = &meta.certificate {
            if c.len() != p.num_components() {
                return Err(Error::DimensionMismatch {
                    expected: p.num_components(),
                    got: c.len(),
                });
            }
        }
        p.meta = ProblemMeta {
            smoothness: p.meta.smoothness,
            lipschitz: p.meta.lipschitz,
            ..meta
        };
        Ok(p)
    }

    pub fn components(&self) -> &[Component<T>] {
        &self.components
    }

    pub fn component(&self, t: usize) -> &Component<T> {
        &self.components[t]
    }

    /// `T`, the number of components.
    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.dimension
    }

    pub fn meta(&self) -> &ProblemMeta<T> {
        &self.meta
    }

    pub fn is_smooth(&self) -> bool {
        self.components.iter().all(Component::is_smooth)
    }

    pub fn x_star(&self) -> Result<&[T]> {
        self.meta.x_star.as_deref().ok_or(Error::UnknownMinimizer)
    }

    pub fn f_star(&self) -> Result<T> {
        self.meta.f_star.ok_or(Error::UnknownOptimalValue)
    }

    pub fn smoothness(&self) -> Result<T> {
        self.meta.smoothness.ok_or(Error::UnknownConstant("L"))
    }

    pub fn lipschitz(&self) -> Result<T> {
        self.meta.lipschitz.ok_or(Error::UnknownConstant("G"))
    }

    pub(crate) fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() == self.dimension {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            })
        }
    }

    /// `f(x)` and each `f_t(x)`.
    pub fn evaluate(&self, x: &[T]) -> Result<Evaluation<T>> {
        self.check_dim(x)?;
        let per_component: Vec<T> = self.components.iter().map(|c| c.value(x)).collect();
        let value = mean(&per_component);
        Ok(Evaluation {
            value,
            per_component,
        })
    }

    /// `f(x)` without the dimension check.
    pub fn objective(&self, x: &[T]) -> T {
        mean(&self.components.iter().map(|c| c.value(x)).collect::<Vec<_>>())
    }

    /// `f(x) − f*`.
    pub fn gap(&self, x: &[T]) -> Result<T> {
        let f_star = self.f_star()?;
        Ok(self.evaluate(x)?.value - f_star)
    }

    /// `∇f_t(x)` for every component.
    pub fn component_gradients(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        self.check_dim(x)?;
        self.components
            .iter()
            .enumerate()
            .map(|(index, c)| {
                c.gradient(x).ok_or(Error::NonSmoothComponent {
                    index,
                    kind: c.kind_name(),
                })
            })
            .collect()
    }

    /// `∇f(x) = (1/T) Σ_t ∇f_t(x)`.
    pub fn gradient(&self, x: &[T]) -> Result<Vec<T>> {
        let grads = self.component_gradients(x)?;
        let mut g = vec![T::zero(); self.dimension];
        for gt in &grads {
            linalg::axpy(T::one(), gt, &mut g);
        }
        Ok(linalg::scale(&g, T::one() / T::of_usize(grads.len())))
    }

    /// `σ*² = (1/T) Σ_t ‖∇f_t(x*)‖²`, recomputed from the data.
    pub fn sigma_star_sq(&self) -> Result<T> {
        let x = self.x_star()?;
        let grads = self.component_gradients(x)?;
        let total: T = grads.iter().map(|g| linalg::norm_sq(g)).sum();
        Ok(total / T::of_usize(grads.len()))
    }

    /// `(1/T)‖Σ_t s_t‖` where `s_t` is the gradient of smooth components and
    /// `θ_t · v_t` for ridge components with subdifferential `{c v_t}`. Returns
    /// `None` if some `θ_t` lies outside its admissible interval by more than
    /// `tol`. Points within `tol` of a kink count as kinked.
    pub fn certificate_residual(&self, x: &[T], theta: &[T], tol: T) -> Result<Option<T>> {
        self.check_dim(x)?;
        if theta.len() != self.num_components() {
            return Err(Error::DimensionMismatch {
                expected: self.num_components(),
                got: theta.len(),
            });
        }
        let mut sum = vec![T::zero(); self.dimension];
        for (c, &th) in self.components.iter().zip(theta) {
            if let Some(g) = c.gradient(x) {
                linalg::axpy(T::one(), &g, &mut sum);
                continue;
            }
            let sd = c
                .ridge_subdifferential(x, tol)
                .expect("nonsmooth kinds are ridge functions");
            if th < sd.lo - tol || th > sd.hi + tol {
                return Ok(None);
            }
            linalg::axpy(th, &sd.vector, &mut sum);
        }
        Ok(Some(linalg::norm(&sum) / T::of_usize(self.num_components())))
    }

    /// Checks `0 ∈ ∂f(x*)` using the stored certificate (nonsmooth) or the
    /// averaged gradient (smooth).
    pub fn verify_certificate(&self, tol: T) -> Result<bool> {
        let x = self.x_star()?;
        if self.is_smooth() {
            let g = self.gradient(x)?;
            return Ok(linalg::norm(&g) <= tol * T::one().max(linalg::norm(x)));
        }
        let theta = self
            .meta
            .certificate
            .as_deref()
            .ok_or(Error::UnknownConstant("minimizer certificate"))?;
        Ok(matches!(self.certificate_residual(x, theta, tol)?, Some(r) if r <= tol))
    }
}

fn mean<T: Scalar>(v: &[T]) -> T {
    v.iter().copied().sum::<T>() / T::of_usize(v.len())
}

fn uniform_constant<T: Scalar>(
    components: &[Component<T>],
    f: impl Fn(&Component<T>) -> Option<T>,
) -> Option<T> {
    components
        .iter()
        .map(f)
        .try_fold(T::zero(), |acc, c| c.map(|c| acc.max(c)))
}
