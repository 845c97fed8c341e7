//! Criterion 10 (pipeline determinism) and the stage-dependency contract,
//! exercised through the real binary on the shipped synthetic fixture.

use std::path::Path;
use std::process::{Command, Output};

const STAGES: &[&str] = &[
    "ingest",
    "match-queries",
    "filter-users",
    "label-aggregate",
    "train-relevance",
    "derive-groups",
    "extract-features",
    "train-user-model",
    "compare-groups",
    "report",
];

fn run(config: &Path, out: &Path, stage: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rumorlens"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg(stage)
        .output()
        .expect("spawn rumorlens")
}

fn run_all(config: &Path, out: &Path) {
    for stage in STAGES {
        let output = run(config, out, stage);
        assert!(
            output.status.success(),
            "stage {stage} failed:\n{}",
            String::from_utf8_lossy(&output.stderr)
        );
    }
}

fn read(out: &Path, rel: &str) -> Vec<u8> {
    std::fs::read(out.join(rel)).unwrap_or_else(|e| panic!("reading {rel}: {e}"))
}

#[test]
fn criterion_10_pipeline_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = rumorlens::synth::write_pipeline_fixture(dir.path(), 42).unwrap();

    let out_a = dir.path().join("run_a");
    let out_b = dir.path().join("run_b");
    run_all(&config, &out_a);
    run_all(&config, &out_b);

    for rel in [
        "models/cascade.txt",
        "models/user_model.txt",
        "models/user_model_table.tsv",
        "report.txt",
        "groups/groups.tsv",
        "features/matrix.tsv",
        "compare/comparison.tsv",
    ] {
        assert_eq!(read(&out_a, rel), read(&out_b, rel), "{rel} differs across runs");
    }

    // the fixture's planted group structure is recovered exactly
    let groups = String::from_utf8(read(&out_a, "groups/groups.tsv")).unwrap();
    let count = |g: &str| groups.lines().filter(|l| l.ends_with(&format!("\t{g}"))).count();
    assert_eq!(count("rumor"), 10);
    assert_eq!(count("control_personal"), 8);
    assert_eq!(count("control_non_personal"), 8);
    assert_eq!(count("excluded"), 10);

    let report = String::from_utf8(read(&out_a, "report.txt")).unwrap();
    assert!(report.contains("post-selection inference"));
    assert!(report.contains("## Group comparisons"));

    println!("PASS: criterion 10 (two full runs byte-identical; groups 10/8/8/10)");
}

#[test]
fn missing_prerequisite_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let config = rumorlens::synth::write_pipeline_fixture(dir.path(), 7).unwrap();
    let out = dir.path().join("out");

    let output = run(&config, &out, "filter-users");
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("rumorlens ingest"), "stderr: {stderr}");
}

#[test]
fn stale_artifact_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let config = rumorlens::synth::write_pipeline_fixture(dir.path(), 7).unwrap();
    let out = dir.path().join("out");

    assert!(run(&config, &out, "ingest").status.success());
    std::fs::write(out.join("ingest/summary.txt"), "tampered\n").unwrap();
    let output = run(&config, &out, "filter-users");
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("stale"), "stderr: {stderr}");
}
