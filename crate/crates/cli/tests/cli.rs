//! End-to-end tests of the `swsim` binary: exit codes, printed summaries,
//! and report reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn swsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swsim"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Example weights: codes [7,0,1,0,2,0,1,0] at b=3 (scale 1/7).
fn write_example_weights(dir: &Path) {
    let w: Vec<String> = [7, 0, 1, 0, 2, 0, 1, 0]
        .iter()
        .map(|&m| (f64::from(m) / 7.0).to_string())
        .collect();
    std::fs::write(dir.join("w.csv"), w.join(",") + "\n").unwrap();
}

/// Matching activations: codes [1,0,3,0,2,0,1,0] at bx=2 (scale 1/3).
fn write_example_activations(dir: &Path) {
    let x: Vec<String> = [1, 0, 3, 0, 2, 0, 1, 0]
        .iter()
        .map(|&m| (f64::from(m) / 3.0).to_string())
        .collect();
    std::fs::write(dir.join("x.csv"), x.join(",") + "\n").unwrap();
}

#[test]
fn map_reports_example_section_counts() {
    let dir = tempfile::tempdir().unwrap();
    write_example_weights(dir.path());
    let out = swsim(
        dir.path(),
        &["map", "--weights", "w.csv", "--rows", "2", "--bits", "3", "--abits", "2"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("2 sorted vs 4 baseline"), "{text}");
    assert!(text.contains("4 sorted vs 6 baseline"), "{text}");
    assert!(text.contains("8 muxes"), "{text}");
}

#[test]
fn map_handles_all_zero_weights() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("z.csv"), "0,0,0,0\n").unwrap();
    let out = swsim(dir.path(), &["map", "--weights", "z.csv", "--rows", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("0 sorted"), "{}", stdout(&out));
}

#[test]
fn simulate_prints_savings_and_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    write_example_weights(dir.path());
    write_example_activations(dir.path());
    let out = swsim(
        dir.path(),
        &[
            "simulate",
            "--weights",
            "w.csv",
            "--activations",
            "x.csv",
            "--rows",
            "2",
            "--bits",
            "3",
            "--abits",
            "2",
            "--out",
            "r.json",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("max_abs error 0"), "{text}");
    assert!(text.contains("33.33%"), "{text}");

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap())
            .unwrap();
    assert_eq!(report["sorted"][0]["total_conversions"], 4);
    assert_eq!(report["baseline"][0]["total_conversions"], 6);
    assert_eq!(report["errors"][0]["sorted"]["max_abs"], 0.0);
}

#[test]
fn simulate_reports_are_reproducible_modulo_timestamp() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut reports = Vec::new();
    for dir in &dirs {
        write_example_weights(dir.path());
        let out = swsim(
            dir.path(),
            &[
                "simulate", "--weights", "w.csv", "--rows", "2", "--bits", "3",
                "--abits", "2", "--seed", "9", "--out", "r.json",
            ],
        );
        assert!(out.status.success(), "{}", stderr(&out));
        let mut doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap())
                .unwrap();
        doc["timestamp"] = serde_json::Value::Null;
        reports.push(doc);
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn compare_uses_fixed_resolution_baseline() {
    let dir = tempfile::tempdir().unwrap();
    write_example_weights(dir.path());
    write_example_activations(dir.path());
    let out = swsim(
        dir.path(),
        &[
            "compare", "--weights", "w.csv", "--activations", "x.csv", "--rows", "2",
            "--bits", "3", "--abits", "2", "--profile", "10,10,2", "--out", "c.json",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("baseline fixed 10-bit"), "{text}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("c.json")).unwrap())
            .unwrap();
    assert_eq!(report["sorted"][0]["config"]["profile"], serde_json::json!([10, 10, 2]));
    assert_eq!(
        report["baseline"][0]["config"]["profile"],
        serde_json::json!([10, 10, 10])
    );
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    write_example_weights(dir.path());
    std::fs::write(
        dir.path().join("exp.toml"),
        "weights = \"w.csv\"\nweight_bits = 3\nactivation_bits = 2\nrows_per_section = 4\nsparsity = 0.0\n",
    )
    .unwrap();
    let out = swsim(
        dir.path(),
        &[
            "simulate", "--config", "exp.toml", "--rows", "2", "--sparsity", "0.5",
            "--out", "r.json",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap())
            .unwrap();
    assert_eq!(report["config"]["rows_per_section"], 2);
    assert_eq!(report["config"]["sparsity"], 0.5);
}

#[test]
fn bad_profile_length_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    write_example_weights(dir.path());
    let out = swsim(
        dir.path(),
        &["simulate", "--weights", "w.csv", "--bits", "3", "--profile", "10,10"],
    );
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("profile"), "{}", stderr(&out));
}

#[test]
fn missing_weights_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = swsim(dir.path(), &["map", "--weights", "nope.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nope.csv"), "{}", stderr(&out));
}

#[test]
fn strict_config_rejects_unknown_keys_lenient_warns() {
    let dir = tempfile::tempdir().unwrap();
    write_example_weights(dir.path());
    std::fs::write(
        dir.path().join("exp.toml"),
        "weights = \"w.csv\"\nweight_bits = 3\nmystery = true\n",
    )
    .unwrap();
    let strict = swsim(dir.path(), &["map", "--config", "exp.toml", "--rows", "2"]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(stderr(&strict).contains("mystery"), "{}", stderr(&strict));

    let lenient = swsim(
        dir.path(),
        &["map", "--config", "exp.toml", "--rows", "2", "--strict", "false"],
    );
    assert!(lenient.status.success(), "{}", stderr(&lenient));
    assert!(stderr(&lenient).contains("mystery"), "{}", stderr(&lenient));
}

#[test]
fn theory_prefix_matches_reference_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = swsim(
        dir.path(),
        &[
            "theory", "prefix", "--sigma", "1", "--lo", "0", "--bit", "1",
            "--samples", "200000",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("0.5155"), "{}", stdout(&out));

    let bad = swsim(
        dir.path(),
        &["theory", "prefix", "--sigma", "1", "--lo", "-1", "--bit", "1"],
    );
    assert_eq!(bad.status.code(), Some(1), "{}", stderr(&bad));
}

#[test]
fn theory_section_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = swsim(
        dir.path(),
        &[
            "theory", "section", "--sigma", "1", "--lo", "0", "--hi", "1", "--column",
            "0", "--bits", "3", "--scale", "0.14285714285714285", "--samples", "200000",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("0.56"), "{}", stdout(&out));
}

#[test]
fn sweep_emits_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    write_example_weights(dir.path());
    let out = swsim(
        dir.path(),
        &[
            "sweep", "--weights", "w.csv", "--bits", "3", "--abits", "2",
            "--sparsity-grid", "0,0.5", "--rows-grid", "2,4", "--workers", "2",
            "--out", "s.csv",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 4, "header plus 2x2 cells: {csv}");
    assert!(lines[0].starts_with("layer,sparsity,rows_per_section"), "{csv}");

    // Sweeps are deterministic: a second run yields identical bytes.
    let rerun = swsim(
        dir.path(),
        &[
            "sweep", "--weights", "w.csv", "--bits", "3", "--abits", "2",
            "--sparsity-grid", "0,0.5", "--rows-grid", "2,4", "--workers", "2",
            "--out", "s2.csv",
        ],
    );
    assert!(rerun.status.success());
    let csv2 = std::fs::read_to_string(dir.path().join("s2.csv")).unwrap();
    assert_eq!(csv, csv2);
}

#[test]
fn analyze_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    write_example_weights(dir.path());
    let out = swsim(
        dir.path(),
        &["analyze", "--weights", "w.csv", "--rows", "2", "--bits", "3"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("analyze.csv")).unwrap();
    assert!(csv.starts_with("layer,row,section"), "{csv}");
    // 2 sorted sections x 3 columns = 6 data rows.
    assert_eq!(csv.lines().count(), 7, "{csv}");
}
