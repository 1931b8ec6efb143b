//! Pipeline integration: stage-wise execution must match `run` byte for
//! byte, reruns must be deterministic, failures must clean up, and the
//! installed binary must drive the same pipeline.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use narmap_cli::config::PipelineConfig;
use narmap_cli::pipeline::{self, Manifest};

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn load(name: &str) -> PipelineConfig {
    PipelineConfig::load(&repo_config(name)).expect("config loads")
}

fn read_dir_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort_by(|a, b| a.0.cmp(&b.0));
    files
}

#[test]
fn run_produces_consistent_manifest() {
    let config = load("demo_dialogue.toml");
    let dir = tempfile::tempdir().unwrap();
    let manifest = pipeline::run(&config, dir.path()).unwrap();
    assert!(!manifest.artifacts.is_empty());
    for entry in &manifest.artifacts {
        let bytes = fs::read(dir.path().join(&entry.path)).unwrap();
        assert_eq!(bytes.len() as u64, entry.bytes, "{}", entry.path);
    }
    // the expected artifact set for a dendrogram-mode dialogue run
    let names: Vec<&str> = manifest.artifacts.iter().map(|a| a.path.as_str()).collect();
    for expected in [
        pipeline::UNITS,
        pipeline::TABLE_DENSE,
        pipeline::TABLE_SPARSE,
        pipeline::TABLE_SUMMARY,
        pipeline::MODEL,
        pipeline::ROW_PRINCIPAL,
        pipeline::COL_PRINCIPAL,
        pipeline::ROW_COS2,
        pipeline::DENDROGRAM_JSON,
        pipeline::DENDROGRAM_TXT,
        pipeline::PARTITION,
        pipeline::TRACK_CSV,
        pipeline::TRACK_SVG,
        pipeline::REPORT,
    ] {
        assert!(names.contains(&expected), "missing {expected}");
    }
    let report = fs::read_to_string(dir.path().join(pipeline::REPORT)).unwrap();
    assert!(report.contains("factor space"));
    assert!(report.contains("axis 1"));
}

#[test]
fn stagewise_equals_end_to_end() {
    let config = load("demo_dialogue.toml");
    let staged = tempfile::tempdir().unwrap();
    pipeline::stage_ingest(&config, staged.path()).unwrap();
    pipeline::stage_table(&config, staged.path()).unwrap();
    pipeline::stage_ca(&config, staged.path()).unwrap();
    pipeline::stage_cluster(&config, staged.path()).unwrap();
    pipeline::stage_track(&config, staged.path()).unwrap();
    pipeline::stage_report(&config, staged.path()).unwrap();

    let direct = tempfile::tempdir().unwrap();
    pipeline::run(&config, direct.path()).unwrap();

    let staged_files = read_dir_files(staged.path());
    let mut direct_files = read_dir_files(direct.path());
    direct_files.retain(|(name, _)| name != pipeline::MANIFEST);
    assert_eq!(staged_files.len(), direct_files.len());
    for ((staged_name, staged_bytes), (direct_name, direct_bytes)) in
        staged_files.iter().zip(&direct_files)
    {
        assert_eq!(staged_name, direct_name);
        assert_eq!(
            staged_bytes, direct_bytes,
            "artifact {staged_name} differs between staged and direct runs"
        );
    }
}

#[test]
fn reruns_are_byte_identical() {
    let config = load("demo_tweets.toml");
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let m1: Manifest = pipeline::run(&config, first.path()).unwrap();
    let m2: Manifest = pipeline::run(&config, second.path()).unwrap();
    assert_eq!(m1, m2);
    assert_eq!(
        fs::read(first.path().join(pipeline::MANIFEST)).unwrap(),
        fs::read(second.path().join(pipeline::MANIFEST)).unwrap()
    );
    for entry in &m1.artifacts {
        assert_eq!(
            fs::read(first.path().join(&entry.path)).unwrap(),
            fs::read(second.path().join(&entry.path)).unwrap(),
            "{} differs",
            entry.path
        );
    }
}

#[test]
fn segment_run_tracks_emotive_term_to_its_phase() {
    let config = load("demo_tweets.toml");
    let dir = tempfile::tempdir().unwrap();
    pipeline::run(&config, dir.path()).unwrap();

    let seg_csv = fs::read_to_string(dir.path().join(pipeline::SEGMENTS_CSV)).unwrap();
    let lines: Vec<&str> = seg_csv.lines().collect();
    assert_eq!(lines.len(), 1 + 3, "three phase segments: {seg_csv}");
    assert!(lines[1].starts_with("s1,2014-10-10 00:00:00,2014-10-10 07:00:00,8,"));

    let closest = fs::read_to_string(dir.path().join(pipeline::CLOSEST_SEGMENTS)).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&closest).unwrap();
    let angry = parsed
        .as_array()
        .unwrap()
        .iter()
        .find(|v| v["term"] == "angry")
        .unwrap();
    assert_eq!(angry["segment"], 2);
    assert_eq!(angry["n_units"], 8);
}

#[test]
fn stages_report_missing_upstream_files() {
    let config = load("demo_dialogue.toml");
    let dir = tempfile::tempdir().unwrap();
    let err = pipeline::stage_table(&config, dir.path()).unwrap_err();
    let message = format!("{err:#}");
    assert!(message.contains("units.jsonl"), "{message}");
    assert!(message.contains("narmap ingest"), "{message}");
}

#[test]
fn failed_run_removes_partial_outputs() {
    // an independence table: ca has no factor structure, the run aborts
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("flat.csv"), "1,A,a b\n2,B,a b a b\n").unwrap();
    fs::write(
        dir.path().join("config.toml"),
        r#"
[source]
path = "flat.csv"
format = "dialogue-csv"
include_speaker_tokens = false

[filter]
min_units_per_word = 1
min_total_per_word = 1

[output]
dir = "out"
"#,
    )
    .unwrap();
    let config = PipelineConfig::load(&dir.path().join("config.toml")).unwrap();
    let out = dir.path().join("out");
    let err = pipeline::run(&config, &out).unwrap_err();
    let message = format!("{err:#}");
    assert!(message.contains("stage ca"), "{message}");
    assert!(!out.join(pipeline::UNITS).exists(), "partial outputs removed");
    assert!(!out.join(pipeline::TABLE_DENSE).exists());
    assert!(!out.join(pipeline::MANIFEST).exists());
}

#[test]
fn binary_runs_the_demo_config() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_narmap"))
        .args([
            "run",
            "--config",
            repo_config("demo_dialogue.toml").to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .status()
        .expect("binary runs");
    assert!(status.success());
    assert!(dir.path().join(pipeline::MANIFEST).exists());

    // nonzero exit and a stage-tagged message on failure
    let output = Command::new(env!("CARGO_BIN_EXE_narmap"))
        .args(["table", "--config", repo_config("demo_dialogue.toml").to_str().unwrap()])
        .arg("--out")
        .arg(dir.path().join("empty").to_str().unwrap())
        .output()
        .expect("binary runs");
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("units.jsonl"), "{stderr}");
}
