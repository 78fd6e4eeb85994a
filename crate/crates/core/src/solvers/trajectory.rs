use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Method, RunConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const TRAJECTORY_FORMAT_VERSION: u32 = 1;

/// Everything a run produced. Epoch `k` (1-based in the math) uses
/// `steps[k-1]`, `ordering[k-1]` and, for inexact runs, `slot_eps[k-1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Trajectory<T> {
    pub method: Method,
    pub seed: u64,
    pub x0: Vec<T>,
    /// `x_0..x_K`
    pub iterates: Vec<Vec<T>>,
    /// `f(x_k) − f*` for `k = 0..K`, when `f*` is known.
    pub gaps: Option<Vec<T>>,
    pub dist_to_x_star: Option<Vec<T>>,
    /// `η_1..η_K`
    pub steps: Vec<T>,
    /// `inner_iterates[k][t] = x_{k,t+1}` for `t = 0..=T`, when recorded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_iterates: Option<Vec<Vec<Vec<T>>>>,
    /// Realized certified `ε_{k−1,t}` of inexact runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot_eps: Option<Vec<Vec<T>>>,
    /// `Σ_t ε_{k−1,t}` per epoch (zeros for exact methods).
    pub per_epoch_eps: Vec<T>,
    pub ordering: Vec<Vec<usize>>,
    /// Component oracle calls made by the outer loop (`K·T`).
    pub oracle_count: usize,
    /// Oracle calls made inside inexact prox solves.
    pub inner_oracle_count: usize,
}

/// One CSV line per epoch. Row `k = 0` has `step = eps_sum = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrajectoryRow<T> {
    pub k: usize,
    pub gap: Option<T>,
    pub dist_to_xstar: Option<T>,
    pub step: T,
    pub eps_sum: T,
}

/// JSON companion of a trajectory CSV: the configuration and the full run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Scalar")]
pub struct TrajectoryEnvelope<T> {
    pub version: u32,
    pub config: RunConfig<T>,
    pub seed: u64,
    pub trajectory: Trajectory<T>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn epochs(&self) -> usize {
        self.steps.len()
    }

    pub fn last(&self) -> &[T] {
        self.iterates.last().expect("trajectory holds x0")
    }

    pub fn final_gap(&self) -> Option<T> {
        self.gaps.as_ref().and_then(|g| g.last().copied())
    }

    pub fn rows(&self) -> Vec<TrajectoryRow<T>> {
        (0..self.iterates.len())
            .map(|k| TrajectoryRow {
                k,
                gap: self.gaps.as_ref().map(|g| g[k]),
                dist_to_xstar: self.dist_to_x_star.as_ref().map(|d| d[k]),
                step: if k == 0 { T::zero() } else { self.steps[k - 1] },
                eps_sum: if k == 0 { T::zero() } else { self.per_epoch_eps[k - 1] },
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in self.rows() {
            out.serialize(row)?;
        }
        out.flush().map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn envelope(&self, config: &RunConfig<T>) -> TrajectoryEnvelope<T> {
        TrajectoryEnvelope {
            version: TRAJECTORY_FORMAT_VERSION,
            config: config.clone(),
            seed: config.seed,
            trajectory: self.clone(),
        }
    }

    /// Writes `<path>` (CSV) and its `.json` sibling (envelope).
    pub fn save(&self, csv_path: impl AsRef<Path>, config: &RunConfig<T>) -> Result<()> {
        let csv_path = csv_path.as_ref();
        std::fs::write(csv_path, self.to_csv_string()?).map_err(|e| io_error(csv_path, e))?;
        let json_path = envelope_path(csv_path);
        let body = serde_json::to_string(&self.envelope(config))?;
        std::fs::write(&json_path, body).map_err(|e| io_error(&json_path, e))
    }
}

impl<T: Scalar> TrajectoryEnvelope<T> {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        let env: Self = serde_json::from_str(&s)?;
        if env.version != TRAJECTORY_FORMAT_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported trajectory format version {}",
                env.version
            )));
        }
        Ok(env)
    }
}

/// `runs/a.csv` → `runs/a.json`.
pub fn envelope_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub(crate) fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Serialization(format!("{}: {e}", path.display()))
}

pub fn read_rows<T: Scalar>(csv_text: &str) -> Result<Vec<TrajectoryRow<T>>> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
