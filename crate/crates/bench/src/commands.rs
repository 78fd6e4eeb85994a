//! CLI verbs. Each returns the process exit code and writes diagnostics to
//! standard error.

use std::path::{Path, PathBuf};

use lastiter::analysis::{bound_report, lemma1, lemma4, lemma5, lemma6, verify_lemma3, BoundKind, Lemma3Mode, Reference};
use lastiter::solvers::{envelope_path, TrajectoryEnvelope};
use lastiter::Problem;

use crate::execute::execute;
use crate::manifest::{Manifest, MANIFEST_FILE, PROBLEM_FILE, SUMMARY_FILE};
use crate::plan::Plan;
use crate::report::{summarize, summary_csv};
use crate::spec::Verifier;
use crate::BenchError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFIER_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Environment variable naming the root for relative output directories.
pub const OUT_ROOT_VAR: &str = "LASTITER_OUT";

fn report_error(e: &BenchError) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}

/// `outputs.dir` (default: the experiment name), resolved against
/// `root`, then `$LASTITER_OUT`, then the working directory.
pub fn output_dir(plan: &Plan, root: Option<&Path>) -> PathBuf {
    let dir = PathBuf::from(plan.outputs.dir.clone().unwrap_or_else(|| plan.name.clone()));
    if dir.is_absolute() {
        return dir;
    }
    let root = root
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_ROOT_VAR).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    root.join(dir)
}

pub fn cmd_run(spec_path: &Path, root: Option<&Path>) -> i32 {
    match try_run(spec_path, root) {
        Ok(code) => code,
        Err(e) => report_error(&e),
    }
}

fn try_run(spec_path: &Path, root: Option<&Path>) -> Result<i32, BenchError> {
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| BenchError::Io(format!("{}: {e}", spec_path.display())))?;
    let plan = Plan::from_spec_text(&text)?;
    let exec = execute(&plan)?;
    let dir = output_dir(&plan, root);
    exec.write_to(&dir)?;
    println!("{}", dir.join(MANIFEST_FILE).display());
    match exec.first_failure() {
        Some(f) => {
            eprintln!("{f}");
            Ok(EXIT_VERIFIER_FAILED)
        }
        None => Ok(EXIT_OK),
    }
}

pub fn cmd_report(manifest_path: &Path) -> i32 {
    let result = (|| {
        let manifest = Manifest::load(manifest_path)?;
        let dir = manifest_dir(manifest_path);
        let rows = summarize(&manifest, &dir)?;
        let path = dir.join(SUMMARY_FILE);
        std::fs::write(&path, summary_csv(&rows)?).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
        println!("{}", path.display());
        Ok(EXIT_OK)
    })();
    result.unwrap_or_else(|e| report_error(&e))
}

/// Re-executes a manifest and compares every artifact byte for byte with
/// the files next to it. With `write_dir`, the fresh artifacts are also
/// written there.
pub fn cmd_replay(manifest_path: &Path, write_dir: Option<&Path>) -> i32 {
    let result = (|| {
        let manifest = Manifest::load(manifest_path)?;
        let plan = Plan::from_manifest(&manifest)?;
        let exec = execute(&plan)?;
        if let Some(dir) = write_dir {
            exec.write_to(dir)?;
        }
        let diffs = exec.differences(&manifest_dir(manifest_path))?;
        if diffs.is_empty() {
            println!("identical: {} files", exec.files.len());
            Ok(EXIT_OK)
        } else {
            for d in &diffs {
                eprintln!("differs: {d}");
            }
            Ok(EXIT_VERIFIER_FAILED)
        }
    })();
    result.unwrap_or_else(|e| report_error(&e))
}

fn manifest_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Default problem location for a trajectory at `<dir>/runs/<id>.csv`.
fn default_problem_path(csv_path: &Path) -> PathBuf {
    let runs_dir = manifest_dir(csv_path);
    let beside = runs_dir.join(PROBLEM_FILE);
    if beside.exists() {
        return beside;
    }
    runs_dir.parent().map_or(beside.clone(), |p| p.join(PROBLEM_FILE))
}

pub fn parse_reference(name: &str) -> Option<Reference<f64>> {
    match name {
        "x-star" => Some(Reference::XStar),
        "x0" => Some(Reference::X0),
        "midpoint" => Some(Reference::Midpoint),
        _ => None,
    }
}

/// Evaluates one verifier against a saved trajectory and prints the report
/// CSV to standard output.
pub fn cmd_verify(csv_path: &Path, lemma: &str, problem_path: Option<&Path>, reference: &str) -> i32 {
    let result = (|| {
        let verifier = Verifier::parse(lemma).ok_or_else(|| BenchError::Invalid(format!("unknown verifier {lemma:?}")))?;
        let reference = parse_reference(reference)
            .ok_or_else(|| BenchError::Invalid(format!("unknown reference {reference:?} (x-star, x0, midpoint)")))?;
        let problem_path = problem_path.map_or_else(|| default_problem_path(csv_path), Path::to_path_buf);
        let problem = Problem::load(&problem_path).map_err(|e| BenchError::Io(e.to_string()))?;

        if verifier == Verifier::Lemma3 {
            let mode = if problem.num_components() <= lastiter::analysis::LEMMA3_EXHAUSTIVE_CAP {
                Lemma3Mode::Exhaustive
            } else {
                Lemma3Mode::MonteCarlo
            };
            let out = verify_lemma3(&problem, mode, 100_000, 0).map_err(|e| BenchError::Invalid(e.to_string()))?;
            println!("lhs,rhs,ok\n{},{},{}", out.lhs, out.rhs, out.ok);
            return Ok(if out.ok { EXIT_OK } else { EXIT_VERIFIER_FAILED });
        }

        let csv_text = std::fs::read_to_string(csv_path)
            .map_err(|e| BenchError::Io(format!("{}: {e}", csv_path.display())))?;
        let env = TrajectoryEnvelope::<f64>::load(envelope_path(csv_path)).map_err(|e| BenchError::Io(e.to_string()))?;
        let expected = env.trajectory.to_csv_string().map_err(|e| BenchError::Io(e.to_string()))?;
        if expected != csv_text {
            return Err(BenchError::Invalid(format!(
                "{} does not match its envelope {}",
                csv_path.display(),
                envelope_path(csv_path).display()
            )));
        }
        let (cfg, tr) = (&env.config, &env.trajectory);
        let kind = verifier.bound_kind().expect("lemma3 handled above");
        let (alpha, beta) = (cfg.alpha, cfg.beta_value());
        let report = match kind {
            BoundKind::Lemma1 => lemma1(&problem, tr, &reference, alpha, beta),
            BoundKind::Lemma4 => lemma4(&problem, tr, &reference, alpha, beta),
            BoundKind::Lemma5 => lemma5(&problem, tr, &reference),
            BoundKind::Lemma6 => lemma6(&problem, tr, &reference),
            _ => bound_report(kind, &problem, tr, cfg),
        }
        .map_err(|e| BenchError::Invalid(e.to_string()))?;
        print!("{}", report.to_csv_string().map_err(|e| BenchError::Io(e.to_string()))?);
        match report.first_failure() {
            Some(row) => {
                eprintln!(
                    "verifier failed: run {}, k = {}, verifier {} (measured {:e} > bound {:e})",
                    csv_path.display(),
                    row.k,
                    verifier.name(),
                    row.gap,
                    row.rhs
                );
                Ok(EXIT_VERIFIER_FAILED)
            }
            None => Ok(EXIT_OK),
        }
    })();
    result.unwrap_or_else(|e| report_error(&e))
}
