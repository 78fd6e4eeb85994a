//! Aggregation of completed runs across the `K` axis.

use std::path::Path;

use serde::{Deserialize, Serialize};

use lastiter::analysis::{fit_rate_filtered, BoundRow};
use lastiter::solvers::{read_rows, TrajectoryRow};
use lastiter::Problem;

use crate::manifest::{Manifest, ManifestRun, PROBLEM_FILE};
use crate::spec::Verifier;
use crate::BenchError;

/// One row of `summary.csv`. `series` is `last` for the last iterate and
/// `average` for the increasing weighted average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub group: String,
    pub method: String,
    pub ordering: String,
    pub series: String,
    pub points: usize,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r2: Option<f64>,
    pub final_k: usize,
    pub final_gap: f64,
    pub min_bound_slack: Option<f64>,
    pub max_bound_slack: Option<f64>,
}

fn read_text(dir: &Path, rel: &str) -> Result<String, BenchError> {
    let path = dir.join(rel);
    std::fs::read_to_string(&path).map_err(|e| BenchError::Io(format!("missing run file {}: {e}", path.display())))
}

fn report_rows(dir: &Path, rel: &str) -> Result<Vec<BoundRow<f64>>, BenchError> {
    let text = read_text(dir, rel)?;
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| BenchError::Invalid(format!("{rel}: {e}")))
}

struct Series {
    points: Vec<(usize, f64)>,
    slack: Vec<f64>,
}

impl Series {
    fn new() -> Self {
        Self { points: Vec::new(), slack: Vec::new() }
    }

    fn row(mut self, first: &ManifestRun, series: &str, f_star: f64) -> Option<SummaryRow> {
        self.points.sort_by_key(|p| p.0);
        let &(final_k, final_gap) = self.points.last()?;
        let fit = fit_rate_filtered(&self.points, f_star).ok();
        Some(SummaryRow {
            group: first.group.clone(),
            method: first.config.method.name().to_string(),
            ordering: first.config.ordering.name().to_string(),
            series: series.to_string(),
            points: self.points.len(),
            slope: fit.map(|f| f.slope),
            intercept: fit.map(|f| f.intercept),
            r2: fit.map(|f| f.r2),
            final_k,
            final_gap,
            min_bound_slack: self.slack.iter().copied().reduce(f64::min),
            max_bound_slack: self.slack.iter().copied().reduce(f64::max),
        })
    }
}

/// Builds the summary for every run group in manifest order. The slope is
/// left empty when fewer than four usable points remain.
pub fn summarize(manifest: &Manifest, dir: &Path) -> Result<Vec<SummaryRow>, BenchError> {
    if manifest.runs.is_empty() {
        return Err(BenchError::Invalid("manifest lists no runs: empty sweep axis".into()));
    }
    let problem_text = read_text(dir, &manifest.problem_file)?;
    let problem = Problem::from_json(&problem_text).map_err(|e| BenchError::Invalid(format!("{PROBLEM_FILE}: {e}")))?;
    let f_star = problem.f_star().unwrap_or(0.0);

    let mut groups: Vec<(&str, Vec<&ManifestRun>)> = Vec::new();
    for r in &manifest.runs {
        match groups.iter_mut().find(|(g, _)| *g == r.group) {
            Some((_, v)) => v.push(r),
            None => groups.push((&r.group, vec![r])),
        }
    }

    let mut out = Vec::new();
    for (_, runs) in groups {
        let mut last = Series::new();
        let mut average = Series::new();
        for r in &runs {
            let rel = r.trajectory.as_deref().ok_or_else(|| {
                BenchError::Io(format!("run {} has no trajectory file (outputs.trajectories was off)", r.id))
            })?;
            let rows: Vec<TrajectoryRow<f64>> =
                read_rows(&read_text(dir, rel)?).map_err(|e| BenchError::Invalid(format!("{rel}: {e}")))?;
            let gap = rows
                .last()
                .and_then(|row| row.gap)
                .ok_or_else(|| BenchError::Invalid(format!("{rel}: no gap column values")))?;
            last.points.push((r.config.epochs, gap));
            for (name, rel) in &r.reports {
                let verifier = Verifier::parse(name).filter(|v| v.is_theorem());
                let Some(v) = verifier else { continue };
                let rows = report_rows(dir, rel)?;
                let target = if v == Verifier::CorAvg { &mut average } else { &mut last };
                target.slack.extend(rows.iter().map(|b| b.rhs - b.gap));
                if v == Verifier::CorAvg {
                    if let Some(b) = rows.last() {
                        target.points.push((r.config.epochs, b.gap));
                    }
                }
            }
        }
        out.extend(last.row(runs[0], "last", f_star));
        out.extend(average.row(runs[0], "average", f_star));
    }
    Ok(out)
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<Vec<u8>, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| BenchError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| BenchError::Io(e.to_string()))
}
