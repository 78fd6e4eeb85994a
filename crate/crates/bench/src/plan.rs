//! Expansion of a spec into concrete, validated runs.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use lastiter::analysis::{Lemma3Mode, LEMMA3_EXHAUSTIVE_CAP};
use lastiter::{Config, Error, Method, Problem, RunConfig};

use crate::manifest::Manifest;
use crate::spec::{is_safe_name, ExperimentSpec, Lemma3Spec, Outputs, ProblemSpec, Verifier};
use crate::BenchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannedRun {
    /// Unique file stem, `<group>-k<K>`.
    pub id: String,
    /// Runs that differ only in `K`.
    pub group: String,
    pub label: String,
    pub verifiers: Vec<Verifier>,
    pub config: Config,
}

/// Everything needed to execute an experiment, reconstructible from either
/// the spec or its manifest.
#[derive(Debug, Clone)]
pub struct Plan {
    pub name: String,
    pub spec: Value,
    pub spec_sha256: String,
    pub problem_spec: ProblemSpec,
    pub problem: Problem,
    pub runs: Vec<PlannedRun>,
    pub lemma3: Option<Lemma3Spec>,
    pub outputs: Outputs,
    pub jobs: usize,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Plan {
    pub fn from_spec_text(text: &str) -> Result<Self, BenchError> {
        let spec = ExperimentSpec::parse(text)?;
        let value = serde_json::to_value(&spec).map_err(|e| BenchError::Invalid(e.to_string()))?;
        Self::from_spec(spec, value, sha256_hex(text.as_bytes()))
    }

    fn from_spec(spec: ExperimentSpec, value: Value, spec_sha256: String) -> Result<Self, BenchError> {
        let problem = spec.problem.build()?;
        let runs = expand(&spec)?;
        let wants_lemma3 = runs.iter().any(|r| r.verifiers.contains(&Verifier::Lemma3));
        let lemma3 = match (spec.lemma3, wants_lemma3) {
            (Some(l), _) => Some(l),
            (None, true) => Some(Lemma3Spec::default()),
            (None, false) => None,
        };
        let plan = Plan {
            name: spec.name,
            spec: value,
            spec_sha256,
            problem_spec: spec.problem,
            problem,
            runs,
            lemma3,
            outputs: spec.outputs,
            jobs: spec.jobs,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Rebuilds the plan recorded in a manifest without the original spec file.
    pub fn from_manifest(m: &Manifest) -> Result<Self, BenchError> {
        let plan = Plan {
            name: m.name.clone(),
            spec: m.spec.clone(),
            spec_sha256: m.spec_sha256.clone(),
            problem_spec: m.problem.clone(),
            problem: m.problem.build()?,
            runs: m.runs.iter().map(|r| r.planned()).collect(),
            lemma3: m.lemma3,
            outputs: m.outputs.clone(),
            jobs: m.jobs,
        };
        plan.validate()?;
        Ok(plan)
    }

    fn validate(&self) -> Result<(), BenchError> {
        let t = self.problem.num_components();
        if let Some(l) = &self.lemma3 {
            if l.mode == Lemma3Mode::Exhaustive && t > LEMMA3_EXHAUSTIVE_CAP {
                return Err(BenchError::Invalid(format!(
                    "lemma3: {}",
                    Error::FactorialCap { t, cap: LEMMA3_EXHAUSTIVE_CAP }
                )));
            }
            if l.mode == Lemma3Mode::MonteCarlo && l.samples < 2 {
                return Err(BenchError::Invalid("lemma3: monte-carlo needs at least 2 samples".into()));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for run in &self.runs {
            if !seen.insert(run.id.as_str()) {
                return Err(BenchError::Invalid(format!("duplicate run id {:?}", run.id)));
            }
            let cfg = &run.config;
            let describe = |e: Error| BenchError::Invalid(format!("run {} (K = {}): {e}", run.id, cfg.epochs));
            cfg.resolve_steps(&self.problem).map_err(describe)?;
            cfg.resolve_eps(&self.problem).map_err(describe)?;
            cfg.initial_point(&self.problem).map_err(describe)?;
        }
        Ok(())
    }
}

fn expand(spec: &ExperimentSpec) -> Result<Vec<PlannedRun>, BenchError> {
    let sw = &spec.sweeps;
    let orderings: Vec<Option<_>> = axis(&sw.orderings);
    let steps: Vec<Option<(usize, f64)>> = indexed_axis(&sw.step);
    let epss: Vec<Option<(usize, f64)>> = indexed_axis(&sw.eps);
    let seeds: Vec<Option<u64>> = axis(&sw.seeds);

    let mut out = Vec::new();
    for (i, delta) in spec.runs.iter().enumerate() {
        let mut delta = delta.clone();
        let label = match delta.remove("label") {
            Some(Value::String(s)) if is_safe_name(&s) => s,
            Some(other) => {
                return Err(BenchError::Invalid(format!(
                    "runs[{i}].label {other} must be a string of [A-Za-z0-9_-]"
                )))
            }
            None => format!("run{i}"),
        };
        let verifiers: Vec<Verifier> = match delta.remove("verifiers") {
            Some(v) => serde_json::from_value(v)
                .map_err(|e| BenchError::Invalid(format!("runs[{i}].verifiers: {e}")))?,
            None => spec.verifiers.clone(),
        };
        let method = method_of(&spec.base, &delta)
            .map_err(|e| BenchError::Invalid(format!("runs[{i}]: {e}")))?;
        for ordering in &orderings {
            for step in &steps {
                for eps in &epss {
                    for seed in &seeds {
                        let mut group = label.clone();
                        if let Some(o) = ordering {
                            group.push_str(&format!("-{}", o.name()));
                        }
                        if let Some((j, _)) = step {
                            group.push_str(&format!("-eta{j}"));
                        }
                        if let Some((j, _)) = eps {
                            group.push_str(&format!("-eps{j}"));
                        }
                        if let Some(s) = seed {
                            group.push_str(&format!("-s{s}"));
                        }
                        for &k in &sw.epochs {
                            let mut v = serde_json::to_value(RunConfig::<f64>::new(method, k))
                                .map_err(|e| BenchError::Invalid(e.to_string()))?;
                            let obj = v.as_object_mut().expect("config serializes to an object");
                            obj.extend(spec.base.clone());
                            obj.extend(delta.clone());
                            obj.insert("epochs".into(), Value::from(k));
                            if let Some(o) = ordering {
                                obj.insert("ordering".into(), serde_json::to_value(o).expect("ordering"));
                            }
                            if let Some((_, eta)) = step {
                                obj.insert("step".into(), serde_json::json!({"kind": "constant", "value": eta}));
                            }
                            if let Some((_, e)) = eps {
                                obj.insert("eps".into(), serde_json::json!({"kind": "constant", "value": e}));
                            }
                            if let Some(s) = seed {
                                obj.insert("seed".into(), Value::from(*s));
                            }
                            let config: Config = serde_json::from_value(v)
                                .map_err(|e| BenchError::Invalid(format!("runs[{i}] ({label}): {e}")))?;
                            out.push(PlannedRun {
                                id: format!("{group}-k{k}"),
                                group: group.clone(),
                                label: label.clone(),
                                verifiers: verifiers.clone(),
                                config,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn axis<A: Clone>(a: &Option<Vec<A>>) -> Vec<Option<A>> {
    match a {
        Some(v) => v.iter().cloned().map(Some).collect(),
        None => vec![None],
    }
}

fn indexed_axis(a: &Option<Vec<f64>>) -> Vec<Option<(usize, f64)>> {
    match a {
        Some(v) => v.iter().copied().enumerate().map(Some).collect(),
        None => vec![None],
    }
}

fn method_of(base: &Map<String, Value>, delta: &Map<String, Value>) -> Result<Method, String> {
    let v = delta
        .get("method")
        .or_else(|| base.get("method"))
        .ok_or("missing method (igd, ip-exact or ip-inexact)")?;
    serde_json::from_value(v.clone()).map_err(|e| format!("method: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use lastiter::{EpsSchedule, Ordering, StepSchedule};

    fn spec(extra: Value) -> String {
        let mut v = serde_json::json!({
            "version": 1,
            "name": "t",
            "problem": {"family": "quadratic", "d": 3, "t": 4, "sigma_sq": 0.5, "condition": 2.0, "seed": 1},
            "runs": [{"method": "igd", "label": "a"}],
            "sweeps": {"epochs": [8, 16]},
            "verifiers": ["thm1"]
        });
        for (k, val) in extra.as_object().unwrap() {
            v[k] = val.clone();
        }
        v.to_string()
    }

    #[test]
    fn expands_axes_in_order() {
        let text = spec(serde_json::json!({
            "sweeps": {"epochs": [8, 16], "orderings": ["fixed", "random-reshuffle"], "seeds": [3, 4]}
        }));
        let plan = Plan::from_spec_text(&text).unwrap();
        let ids: Vec<&str> = plan.runs.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids.len(), 8);
        assert_eq!(ids[0], "a-fixed-s3-k8");
        assert_eq!(ids[1], "a-fixed-s3-k16");
        assert_eq!(ids[7], "a-random-reshuffle-s4-k16");
        let last = &plan.runs[7].config;
        assert_eq!((last.epochs, last.seed, last.ordering), (16, 4, Ordering::RandomReshuffle));
    }

    #[test]
    fn deltas_override_base_and_axes_override_deltas() {
        let text = spec(serde_json::json!({
            "base": {"alpha": 6.0, "seed": 9},
            "runs": [{"method": "ip-inexact", "label": "b", "seed": 2, "eps": {"kind": "constant", "value": 0.5}}],
            "sweeps": {"epochs": [4], "step": [0.01], "eps": [0.1]},
            "verifiers": []
        }));
        let plan = Plan::from_spec_text(&text).unwrap();
        let c = &plan.runs[0].config;
        assert_eq!(c.alpha, 6.0);
        assert_eq!(c.seed, 2);
        assert_eq!(c.step, StepSchedule::Constant { value: 0.01 });
        assert_eq!(c.eps, EpsSchedule::Constant { value: 0.1 });
        assert_eq!(plan.runs[0].id, "b-eta0-eps0-k4");
    }

    #[test]
    fn step_above_cap_is_a_validation_error_naming_lemma1() {
        let text = spec(serde_json::json!({"sweeps": {"epochs": [8], "step": [10.0]}}));
        let e = Plan::from_spec_text(&text).unwrap_err();
        assert!(matches!(e, BenchError::Invalid(_)));
        assert!(e.to_string().contains("lemma1"), "{e}");
    }

    #[test]
    fn exhaustive_lemma3_with_large_t_is_rejected() {
        let text = spec(serde_json::json!({
            "problem": {"family": "quadratic", "d": 2, "t": 12, "sigma_sq": 1.0, "condition": 2.0, "seed": 1},
            "verifiers": ["lemma3"]
        }));
        let e = Plan::from_spec_text(&text).unwrap_err();
        assert!(e.to_string().contains("factorial cap exceeded"), "{e}");
    }

    #[test]
    fn unknown_run_fields_and_missing_method_are_rejected() {
        let text = spec(serde_json::json!({"runs": [{"method": "igd", "stepsize": 1.0}]}));
        assert!(Plan::from_spec_text(&text).is_err());
        let text = spec(serde_json::json!({"runs": [{"label": "x"}]}));
        assert!(Plan::from_spec_text(&text).unwrap_err().to_string().contains("method"));
    }
}
