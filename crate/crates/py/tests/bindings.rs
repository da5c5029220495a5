use ssiss_py::{erfc_tail_bound, gaussian_integral, run_experiment, smooth_step};

#[test]
fn wrappers_forward_to_the_library() {
    let direct = ssiss::bounds::gaussian_integral_ik(5, 0.7, 1.3).unwrap();
    assert_eq!(gaussian_integral(5, 0.7, 1.3).unwrap(), direct);
    assert_eq!(erfc_tail_bound(1.0).unwrap(), ssiss::bounds::erfc_tail_bound(1.0).unwrap());
    assert_eq!(smooth_step(0.0, 0.3), 0.5);
}

#[test]
fn invalid_inputs_become_errors() {
    assert!(gaussian_integral(2, 0.0, -1.0).is_err());
    assert!(run_experiment("no-such-scenario", "", Vec::new()).is_err());
}

#[test]
fn runs_a_scenario_to_json() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/selective-excite.toml")).unwrap();
    let json = run_experiment("selective-excite", &text, Vec::new()).unwrap();
    assert!(json.contains("\"verdict\""));
}
