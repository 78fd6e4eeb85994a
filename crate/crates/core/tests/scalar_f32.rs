use lastiter::{build_weights, make_lipschitz_suite, make_quadratic_suite, run, Method, Regime, RunConfig};

#[test]
fn quadratic_runs_agree_across_precisions() {
    let p32 = make_quadratic_suite::<f32>(4, 3, 0.5, 4.0, 2).unwrap();
    let p64 = make_quadratic_suite::<f64>(4, 3, 0.5, 4.0, 2).unwrap();
    for method in [Method::Igd, Method::IpExact] {
        let t32 = run(&p32, &RunConfig::new(method, 32)).unwrap();
        let t64 = run(&p64, &RunConfig::new(method, 32)).unwrap();
        for (a, b) in t32.last().iter().zip(t64.last()) {
            assert!((f64::from(*a) - b).abs() <= 1e-3 * (1.0 + b.abs()), "{method:?}: {a} vs {b}");
        }
        let (g32, g64) = (t32.final_gap().unwrap(), t64.final_gap().unwrap());
        assert!(g32 < t32.gaps.as_ref().unwrap()[0]);
        assert!((f64::from(g32) - g64).abs() <= 1e-3 * (1.0 + g64));
    }
}

#[test]
fn nonsmooth_runs_and_weights_in_f32() {
    let p = make_lipschitz_suite::<f32>(3, 4, 1.0, 7).unwrap();
    let tr = run(&p, &RunConfig::new(Method::IpExact, 64).with_step(lastiter::StepSchedule::Theorem3)).unwrap();
    assert!(tr.final_gap().unwrap() < tr.gaps.as_ref().unwrap()[0]);
    let w = build_weights(Regime::LastIterateNonsmooth, &tr.steps, 4.0f32, 4.0, 1.0).unwrap();
    assert_eq!(*w.weights.last().unwrap(), 1.0f32);
    assert!(w.weights.iter().all(|v| v.is_finite() && *v > 0.0));
}
