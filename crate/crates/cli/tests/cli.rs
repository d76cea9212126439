use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn drowsep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drowsep")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, spec: &str, seed: &str, sessions: &str) -> Output {
    let spec_path = dir.join(format!("spec-{seed}.json"));
    fs::write(&spec_path, spec).unwrap();
    drowsep(&["synth", "--spec", s(&spec_path), "--seed", seed, "--sessions", sessions, "--out", s(&dir.join("cohort"))])
}

#[test]
fn synth_output_validates() {
    let tmp = tempfile::tempdir().unwrap();
    let out = synth(tmp.path(), r#"{"n_intervals": 4}"#, "1", "2");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cohort = tmp.path().join("cohort");
    for name in ["synth-1_eeg.csv", "synth-1_telemetry.csv", "synth-1_labels.csv", "synth-2_eeg.csv", "manifest.txt"] {
        assert!(cohort.join(name).exists(), "{name}");
    }
    let labels = fs::read_to_string(cohort.join("synth-1_labels.csv")).unwrap();
    assert_eq!(labels, "interval,rater1,rater2,rater3\n0,1,1,1\n1,1,1,1\n2,4,4,4\n3,4,4,4\n");

    let out = drowsep(&["validate", "--manifest", s(&cohort.join("manifest.txt"))]);
    assert_eq!(out.status.code(), Some(0));
    let listing = String::from_utf8(out.stdout).unwrap();
    assert_eq!(listing, "synth-1: ok\nsynth-2: ok\n");
}

#[test]
fn malformed_eeg_fails_validation_and_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(synth(tmp.path(), r#"{"n_intervals": 2}"#, "3", "2").status.success());
    let cohort = tmp.path().join("cohort");
    let eeg = cohort.join("synth-4_eeg.csv");
    let text = fs::read_to_string(&eeg).unwrap().replacen("t,TP9,AF7,AF8,TP10", "t,TP9,AF7,AF8", 1);
    fs::write(&eeg, text).unwrap();
    let out = drowsep(&["validate", "--manifest", s(&cohort.join("manifest.txt"))]);
    assert_eq!(out.status.code(), Some(1));
    let listing = String::from_utf8(out.stdout).unwrap();
    assert!(listing.contains("synth-3: ok"));
    assert!(listing.contains("synth-4_eeg.csv"), "{listing}");
}

#[test]
fn missing_manifest_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.txt");
    assert_eq!(drowsep(&["validate", "--manifest", s(&missing)]).status.code(), Some(2));
    let out = drowsep(&["analyze", "--manifest", s(&missing), "--out", s(&tmp.path().join("r"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("r").exists());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(drowsep(&["analyze"]).status.code(), Some(2));
    assert_eq!(drowsep(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn zero_multiplier_spec_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = r#"{"drowsy_multipliers": {"delta": 1, "theta": 0, "alpha": 1, "beta": 1, "gamma": 1}}"#;
    let out = synth(tmp.path(), spec, "1", "1");
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("cohort").exists());
    let out = synth(tmp.path(), "{not json", "2", "1");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_state_cohort_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(synth(tmp.path(), r#"{"n_intervals": 6, "drowsy_fraction": 0.0}"#, "1", "1").status.success());
    let out_dir = tmp.path().join("report");
    let out = drowsep(&["analyze", "--manifest", s(&tmp.path().join("cohort/manifest.txt")), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("both alert and drowsy epochs are required"), "{stderr}");
    assert!(!out_dir.exists());
}

#[test]
fn analyze_writes_report_and_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = r#"{"n_intervals": 30, "drowsy_multipliers": {"delta": 1, "theta": 2, "alpha": 1, "beta": 1, "gamma": 1}}"#;
    assert!(synth(tmp.path(), spec, "10", "2").status.success());
    let manifest = tmp.path().join("cohort/manifest.txt");
    let out_dir = tmp.path().join("report");
    let out = drowsep(&["analyze", "--manifest", s(&manifest), "--out", s(&out_dir), "--per-channel-outliers", "--abs-mean"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in [
        "report.json",
        "eeg_absolute.csv",
        "eeg_absolute_significant.csv",
        "eeg_relative.csv",
        "eeg_relative_significant.csv",
        "vehicle.csv",
        "denoise.csv",
    ] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["cohort"], "manifest");
    assert_eq!(report["config"]["outlier_pooling"], "per_channel");
    assert_eq!(report["config"]["vehicle_mode"], "abs_mean");
    assert_eq!(report["config_digest"].as_str().unwrap().len(), 64);
    assert_eq!(report["denoise_table"]["pre_total"], 60);
    let theta = report["eeg_absolute"].as_array().unwrap().iter().filter(|r| {
        r["feature"].as_str().unwrap().contains("_theta_")
    });
    for row in theta {
        assert_eq!(row["significant"], true, "{row}");
    }
    let sig = fs::read_to_string(out_dir.join("eeg_absolute_significant.csv")).unwrap();
    assert_eq!(sig.lines().nth(2).unwrap(), "theta,true,true,true,true");

    // default flags record a different digest
    let out_dir2 = tmp.path().join("report2");
    assert!(drowsep(&["analyze", "--manifest", s(&manifest), "--out", s(&out_dir2)]).status.success());
    let report2: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir2.join("report.json")).unwrap()).unwrap();
    assert_ne!(report["config_digest"], report2["config_digest"]);
}

#[test]
fn features_dumps_per_session_matrices() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(synth(tmp.path(), r#"{"n_intervals": 3}"#, "1", "1").status.success());
    let out_dir = tmp.path().join("features");
    let out = drowsep(&["features", "--manifest", s(&tmp.path().join("cohort/manifest.txt")), "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let eeg = fs::read_to_string(out_dir.join("synth-1_eeg_features.csv")).unwrap();
    let header = eeg.lines().next().unwrap();
    assert!(header.starts_with("interval,state,TP9_delta_abs,TP9_delta_rel,"));
    assert!(header.ends_with("TP10_gamma_abs,TP10_gamma_rel"));
    assert_eq!(eeg.lines().count(), 4);
    assert_eq!(header.split(',').count(), 42);
    let vehicle = fs::read_to_string(out_dir.join("synth-1_vehicle_features.csv")).unwrap();
    assert!(vehicle.starts_with("interval,state,steer_angle,steer_speed,lane_deviation,torque\n0,alert,"));
}
