use std::path::PathBuf;
use std::process::Command;

use ssiss::bounds::Verdict;
use ssiss::experiments::{
    emit_report, run_experiment, run_experiment_with_artifacts, ExperimentConfig, ExperimentReport, Format, Scenario,
};
use ssiss::grid_oracle::SpinorGrid;
use ssiss::pulses::PulseSequence;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn selective() -> ExperimentConfig {
    ExperimentConfig::load(&configs().join("selective-excite.toml"), &[]).unwrap()
}

#[test]
fn shipped_configs_parse_and_validate() {
    for s in Scenario::ALL {
        let cfg = ExperimentConfig::load(&configs().join(format!("{}.toml", s.name())), &[]).unwrap();
        assert_eq!(cfg.scenario, s);
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml().unwrap(), &[]).unwrap();
        assert_eq!(back, cfg);
    }
}

#[test]
fn report_is_deterministic_and_round_trips() {
    let cfg = selective();
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(ExperimentReport::from_json(&a.to_json().unwrap()).unwrap(), a);
    assert_eq!(a.verdict, Verdict::Pass);
}

#[test]
fn emitted_files_follow_their_schemas() {
    let cfg = selective();
    let (report, artifacts) = run_experiment_with_artifacts(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = emit_report(&report, &artifacts, &[Format::Json, Format::Csv, Format::Svg], dir.path()).unwrap();
    for p in &written {
        assert!(p.exists(), "{}", p.display());
    }
    let bounds = std::fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    assert_eq!(bounds.lines().next().unwrap(), "name,inputs_hash,bound,measured,margin,verdict");
    assert_eq!(bounds.lines().count(), report.bounds.len() + 1);
    let state = SpinorGrid::from_binary(dir.path(), "final_state").unwrap();
    assert_eq!(&state, artifacts.final_state.as_ref().unwrap());
    let svg = std::fs::read_to_string(dir.path().join("selective.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("selective-excite,PASS"));
}

#[test]
fn imperfection_table_has_one_row_per_joint() {
    let cfg = ExperimentConfig::load(&configs().join("imperfection-sweep.toml"), &[]).unwrap();
    let (report, artifacts) = run_experiment_with_artifacts(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&report, &artifacts, &[Format::Csv], dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("imperfection.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x_L,y_M_min,bound,measured,margin");
    assert_eq!(lines.count(), 5);
}

#[test]
fn sequence_json_is_emitted_for_pulse_runs() {
    let cfg = ExperimentConfig::load(
        &configs().join("pulse-basic.toml"),
        &["pulse.n=1".into(), "sweep=[{parameter=\"pulse.delta_t\", values=[0.1, 0.2]}]".into()],
    )
    .unwrap();
    let (report, artifacts) = run_experiment_with_artifacts(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&report, &artifacts, &[Format::Json], dir.path()).unwrap();
    let seq = PulseSequence::from_json(&std::fs::read_to_string(dir.path().join("sequence.json")).unwrap()).unwrap();
    assert_eq!(&seq, artifacts.sequence.as_ref().unwrap());
    assert_eq!(seq.steps.len(), 9);
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ssiss")).args(args).output().unwrap()
}

#[test]
fn cli_exit_codes_follow_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("selective-excite.toml");
    let cfg = cfg.to_str().unwrap();
    let out = dir.path().to_str().unwrap();
    let ok = cli(&["selective-excite", "--config", cfg, "--out", out, "--formats", "json,csv"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.path().join("report.json").exists());
    assert!(!dir.path().join("selective.svg").exists());
    // Swapping the packets puts the spectator inside the window.
    let fail = cli(&[
        "selective-excite", "--config", cfg, "--out", out, "--formats", "json",
        "--set", "options.target_x=6", "--set", "options.spectator_x=-6",
    ]);
    assert_eq!(fail.status.code(), Some(1), "{}", String::from_utf8_lossy(&fail.stdout));
    let bad = cli(&["selective-excite", "--config", cfg, "--set", "options.window_eps=-1"]);
    assert_eq!(bad.status.code(), Some(2));
    let unknown = cli(&["no-such-scenario", "--config", cfg]);
    assert_ne!(unknown.status.code(), Some(0));
}
