use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use emergence::report::read_csv;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_emergence"))
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn fixture(dir: &Path) -> PathBuf {
    let fx = dir.join("fx");
    run(&["generate", "--dir", fx.to_str().unwrap(), "--terms-per-cohort", "80"]);
    fx.join("config.json")
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn select_writes_cohort_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path());
    let out = dir.path().join("out");
    run(&["select", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let (header, rows) = read_csv(&out.join("selection_summary.csv")).unwrap();
    assert_eq!(header, ["Year", "# of New MeSH", "# of selected"]);
    assert_eq!(
        rows,
        [["2001", "86", "82"], ["2002", "80", "80"], ["2003", "80", "80"]]
    );
    let (_, detail) = read_csv(&out.join("selection_2001.csv")).unwrap();
    let reasons: Vec<&str> = detail.iter().filter(|r| r[2] == "excluded").map(|r| r[3].as_str()).collect();
    assert_eq!(reasons.len(), 4);
    // only the select outputs exist
    assert_eq!(files(&out).len(), 4);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path());
    let c = config.to_str().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run(&["all", "--config", c, "--out", a.to_str().unwrap()]);
    run(&["all", "--config", c, "--out", b.to_str().unwrap()]);
    let (fa, fb) = (files(&a), files(&b));
    assert!(fa.len() > 15);
    assert_eq!(fa, fb);

    let first_line = String::from_utf8(fa["sweep.csv"].clone()).unwrap();
    assert!(first_line.starts_with("# seed=20 config_hash="));
    let s = dir.path().join("s");
    run(&["train", "--config", c, "--out", s.to_str().unwrap(), "--seed", "99"]);
    let reseeded = std::fs::read_to_string(s.join("sweep.csv")).unwrap();
    assert!(reseeded.starts_with("# seed=99 "));
}

#[test]
fn lag_stages_follow_planted_lag() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path());
    let out = dir.path().join("out");
    run(&["lag", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let (header, rows) = read_csv(&out.join("lag_stages.csv")).unwrap();
    assert_eq!(header[0], "stage");
    assert_eq!(rows.len(), 5);
    // every planted trial sits five years after inclusion
    assert_eq!(rows[2][1], "from 5 to 8");
    assert_eq!(rows[2][3], "100");
    assert_eq!(rows[4][4], "100");
    let (_, hist) = read_csv(&out.join("lag_histogram.csv")).unwrap();
    assert_eq!(hist.len(), 1);
    assert_eq!(hist[0][0], "5");
}

#[test]
fn missing_vocabulary_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"vocabulary": "nowhere/terms.jsonl"}"#).unwrap();
    let out = bin()
        .args(["select", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nowhere/terms.jsonl"), "{stderr}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn rejects_unknown_backend() {
    let out = bin().args(["select", "--backend", "carrier-pigeon"]).output().unwrap();
    assert!(!out.status.success());
}
