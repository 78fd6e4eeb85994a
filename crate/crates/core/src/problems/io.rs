use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Component, ComponentKind, FiniteSumProblem, ProblemMeta};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const PROBLEM_FORMAT_VERSION: u32 = 1;

/// On-disk layout of a problem. Cached constants in `meta` are recomputed on load.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
pub(crate) struct ProblemDocument<T> {
    version: u32,
    dimension: usize,
    components: Vec<ComponentKind<T>>,
    meta: ProblemMeta<T>,
}

impl<T: Scalar> From<FiniteSumProblem<T>> for ProblemDocument<T> {
    fn from(p: FiniteSumProblem<T>) -> Self {
        ProblemDocument {
            version: PROBLEM_FORMAT_VERSION,
            dimension: p.dimension,
            components: p.components.into_iter().map(Into::into).collect(),
            meta: p.meta,
        }
    }
}

impl<T: Scalar> TryFrom<ProblemDocument<T>> for FiniteSumProblem<T> {
    type Error = Error;

    fn try_from(doc: ProblemDocument<T>) -> Result<Self> {
        if doc.version != PROBLEM_FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported problem format version {} (expected {PROBLEM_FORMAT_VERSION})",
                doc.version
            )));
        }
        let components = doc
            .components
            .into_iter()
            .map(Component::new)
            .collect::<Result<Vec<_>>>()?;
        let p = FiniteSumProblem::from_parts(components, doc.meta)?;
        if p.dim() != doc.dimension {
            return Err(Error::DimensionMismatch {
                expected: doc.dimension,
                got: p.dim(),
            });
        }
        Ok(p)
    }
}

impl<T: Scalar> FiniteSumProblem<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_json()?)
            .map_err(|e| Error::Serialization(format!("{}: {e}", path.as_ref().display())))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let s = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Serialization(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_lipschitz_suite, make_quadratic_suite};

    #[test]
    fn quadratic_suite_round_trips_bit_exactly() {
        let p = make_quadratic_suite::<f64>(4, 3, 0.7, 10.0, 5).unwrap();
        let s = p.to_json().unwrap();
        let q = FiniteSumProblem::<f64>::from_json(&s).unwrap();
        assert_eq!(p, q);
        assert_eq!(p.meta(), q.meta());
        assert_eq!(s, q.to_json().unwrap());
    }

    #[test]
    fn lipschitz_suite_round_trips_bit_exactly() {
        let p = make_lipschitz_suite::<f64>(3, 5, 2.0, 9).unwrap();
        let q = FiniteSumProblem::<f64>::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(p, q);
        assert_eq!(p.meta(), q.meta());
    }

    #[test]
    fn document_has_version_and_kind_tags() {
        let p = make_lipschitz_suite::<f64>(2, 3, 1.0, 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&p.to_json().unwrap()).unwrap();
        assert_eq!(v["version"], PROBLEM_FORMAT_VERSION);
        assert_eq!(v["components"][0]["kind"], "scaled_absolute");
        assert_eq!(v["meta"]["provenance"], "constructed");
    }

    #[test]
    fn rejects_unknown_version() {
        let p = make_lipschitz_suite::<f64>(2, 3, 1.0, 1).unwrap();
        let s = p.to_json().unwrap().replace("\"version\": 1", "\"version\": 99");
        assert!(matches!(
            FiniteSumProblem::<f64>::from_json(&s),
            Err(Error::Serialization(_))
        ));
    }
}
