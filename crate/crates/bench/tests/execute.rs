use lastiter_bench::{execute, Plan};

const SPEC: &str = r#"{
  "version": 1,
  "name": "exec",
  "problem": {"family": "lipschitz", "d": 2, "t": 3, "g": 2.0, "seed": 5},
  "runs": [{"method": "ip-exact", "step": {"kind": "theorem3"}, "label": "a"}],
  "sweeps": {"epochs": [8, 32]},
  "verifiers": ["thm3", "lemma5"]
}"#;

#[test]
fn first_failure_names_run_epoch_and_verifier() {
    let plan = Plan::from_spec_text(SPEC).unwrap();
    let mut exec = execute(&plan).unwrap();
    assert!(exec.passed());
    assert_eq!(exec.first_failure(), None);

    let (_, report) = &mut exec.runs[1].reports[1];
    report.rows[4].ok = false;
    let f = exec.first_failure().unwrap();
    assert_eq!((f.run.as_str(), f.k, f.verifier), ("a-k32", Some(5), "lemma5"));
    let line = f.to_string();
    assert!(line.contains("run a-k32") && line.contains("k = 5") && line.contains("verifier lemma5"));
}

#[test]
fn manifest_rebuilds_the_same_plan() {
    let plan = Plan::from_spec_text(SPEC).unwrap();
    let exec = execute(&plan).unwrap();
    let again = Plan::from_manifest(&exec.manifest).unwrap();
    assert_eq!(again.runs, plan.runs);
    assert_eq!(execute(&again).unwrap().files, exec.files);
}
