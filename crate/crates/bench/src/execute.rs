//! Runs a plan and renders every artifact in memory.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use lastiter::analysis::{bound_report, verify_lemma3, Lemma3Outcome};
use lastiter::{run, Problem, Report, Run};

use crate::manifest::{Manifest, ManifestRun, LEMMA3_FILE, MANIFEST_FILE, MANIFEST_VERSION, PROBLEM_FILE};
use crate::plan::{Plan, PlannedRun};
use crate::spec::Verifier;
use crate::BenchError;

pub struct RunOutcome {
    pub planned: PlannedRun,
    pub trajectory: Run,
    pub reports: Vec<(Verifier, Report)>,
}

impl RunOutcome {
    fn first_failure(&self) -> Option<Failure> {
        self.reports.iter().find_map(|(v, r)| {
            r.first_failure().map(|row| Failure {
                run: self.planned.id.clone(),
                k: Some(row.k),
                verifier: v.name(),
                lhs: row.gap,
                rhs: row.rhs,
            })
        })
    }
}

/// First failing `(run, k, verifier)` of an execution.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub run: String,
    pub k: Option<usize>,
    pub verifier: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let k = self.k.map_or_else(|| "-".to_string(), |k| k.to_string());
        write!(
            f,
            "verifier failed: run {}, k = {k}, verifier {} (measured {:e} > bound {:e})",
            self.run, self.verifier, self.lhs, self.rhs
        )
    }
}

pub struct Execution {
    pub manifest: Manifest,
    pub runs: Vec<RunOutcome>,
    pub lemma3: Option<Lemma3Outcome<f64>>,
    /// Relative path to file body, including the manifest.
    pub files: BTreeMap<String, Vec<u8>>,
}

#[derive(Serialize)]
struct Lemma3Row {
    mode: &'static str,
    t: usize,
    lhs: f64,
    rhs: f64,
    std_error: Option<f64>,
    ok: bool,
}

fn csv_bytes<R: Serialize>(rows: &[R]) -> Result<Vec<u8>, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| BenchError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| BenchError::Io(e.to_string()))
}

fn run_one(problem: &Problem, planned: &PlannedRun) -> Result<RunOutcome, BenchError> {
    let fail = |e: lastiter::Error| BenchError::Execution(format!("run {}: {e}", planned.id));
    let trajectory = run(problem, &planned.config).map_err(fail)?;
    let mut reports = Vec::new();
    for &v in &planned.verifiers {
        if let Some(kind) = v.bound_kind() {
            let report = bound_report(kind, problem, &trajectory, &planned.config)
                .map_err(|e| BenchError::Execution(format!("run {}: verifier {}: {e}", planned.id, v.name())))?;
            reports.push((v, report));
        }
    }
    Ok(RunOutcome {
        planned: planned.clone(),
        trajectory,
        reports,
    })
}

pub fn execute(plan: &Plan) -> Result<Execution, BenchError> {
    let outcomes: Vec<Result<RunOutcome, BenchError>> = if plan.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(plan.jobs)
            .build()
            .map_err(|e| BenchError::Execution(e.to_string()))?;
        pool.install(|| plan.runs.par_iter().map(|r| run_one(&plan.problem, r)).collect())
    } else {
        plan.runs.iter().map(|r| run_one(&plan.problem, r)).collect()
    };
    let runs = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;

    let lemma3 = match &plan.lemma3 {
        Some(l) => Some(
            verify_lemma3(&plan.problem, l.mode, l.samples, l.seed)
                .map_err(|e| BenchError::Execution(format!("lemma3: {e}")))?,
        ),
        None => None,
    };

    let mut files = BTreeMap::new();
    let problem_json = plan.problem.to_json().map_err(|e| BenchError::Io(e.to_string()))?;
    files.insert(PROBLEM_FILE.to_string(), problem_json.into_bytes());

    let mut manifest_runs = Vec::with_capacity(runs.len());
    for out in &runs {
        let id = &out.planned.id;
        let trajectory = if plan.outputs.trajectories {
            let csv_path = format!("runs/{id}.csv");
            let body = out.trajectory.to_csv_string().map_err(|e| BenchError::Io(e.to_string()))?;
            files.insert(csv_path.clone(), body.into_bytes());
            let env = serde_json::to_string(&out.trajectory.envelope(&out.planned.config))
                .map_err(|e| BenchError::Io(e.to_string()))?;
            files.insert(format!("runs/{id}.json"), env.into_bytes());
            Some(csv_path)
        } else {
            None
        };
        let mut reports = BTreeMap::new();
        if plan.outputs.reports {
            for (v, r) in &out.reports {
                let path = format!("reports/{id}.{}.csv", v.name());
                let body = r.to_csv_string().map_err(|e| BenchError::Io(e.to_string()))?;
                files.insert(path.clone(), body.into_bytes());
                reports.insert(v.name().to_string(), path);
            }
        }
        manifest_runs.push(ManifestRun {
            id: id.clone(),
            group: out.planned.group.clone(),
            label: out.planned.label.clone(),
            verifiers: out.planned.verifiers.clone(),
            config: out.planned.config.clone(),
            trajectory,
            reports,
            final_gap: out.trajectory.final_gap(),
            passed: out.reports.iter().all(|(_, r)| r.all_ok()),
        });
    }

    if let (Some(spec), Some(res)) = (&plan.lemma3, &lemma3) {
        let row = Lemma3Row {
            mode: match spec.mode {
                lastiter::analysis::Lemma3Mode::Exhaustive => "exhaustive",
                lastiter::analysis::Lemma3Mode::MonteCarlo => "monte-carlo",
            },
            t: plan.problem.num_components(),
            lhs: res.lhs,
            rhs: res.rhs,
            std_error: res.std_error,
            ok: res.ok,
        };
        files.insert(LEMMA3_FILE.to_string(), csv_bytes(&[row])?);
    }

    let mut seeds: BTreeSet<u64> = plan.runs.iter().map(|r| r.config.seed).collect();
    seeds.insert(plan.problem_spec.seed());
    if let Some(l) = &plan.lemma3 {
        if l.mode == lastiter::analysis::Lemma3Mode::MonteCarlo {
            seeds.insert(l.seed);
        }
    }
    let passed = manifest_runs.iter().all(|r| r.passed) && lemma3.as_ref().is_none_or(|l| l.ok);
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        library_version: lastiter::VERSION.to_string(),
        name: plan.name.clone(),
        spec_sha256: plan.spec_sha256.clone(),
        spec: plan.spec.clone(),
        problem: plan.problem_spec.clone(),
        problem_file: PROBLEM_FILE.to_string(),
        seeds: seeds.into_iter().collect(),
        lemma3: plan.lemma3,
        lemma3_result: lemma3.clone(),
        outputs: plan.outputs.clone(),
        jobs: plan.jobs,
        runs: manifest_runs,
        passed,
    };
    files.insert(MANIFEST_FILE.to_string(), manifest.to_json().into_bytes());

    Ok(Execution {
        manifest,
        runs,
        lemma3,
        files,
    })
}

impl Execution {
    pub fn passed(&self) -> bool {
        self.manifest.passed
    }

    /// Runs are scanned in plan order, then the problem-level `lemma3` check.
    pub fn first_failure(&self) -> Option<Failure> {
        self.runs.iter().find_map(RunOutcome::first_failure).or_else(|| {
            self.lemma3.as_ref().filter(|l| !l.ok).map(|l| Failure {
                run: "problem".into(),
                k: None,
                verifier: "lemma3",
                lhs: l.lhs,
                rhs: l.rhs,
            })
        })
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), BenchError> {
        for (rel, body) in &self.files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| BenchError::Io(format!("{}: {e}", parent.display())))?;
            }
            std::fs::write(&path, body).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }

    /// Relative paths whose bytes on disk differ from this execution's output.
    /// A missing file is an error.
    pub fn differences(&self, dir: &Path) -> Result<Vec<String>, BenchError> {
        let mut diffs = Vec::new();
        for (rel, body) in &self.files {
            let path = dir.join(rel);
            let on_disk = std::fs::read(&path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
            if &on_disk != body {
                diffs.push(rel.clone());
            }
        }
        Ok(diffs)
    }
}
