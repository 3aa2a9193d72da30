//! End-to-end checks of the binary: exit codes, report shape, CSV layout,
//! and the validator's accept/reject line.

use std::fs;
use std::path::{Path, PathBuf};

use assert_cmd::Command;
use predicates::prelude::*;
use tempfile::TempDir;

fn mmcap() -> Command {
    Command::cargo_bin("mmcap").unwrap()
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path
}

fn bsc01(dir: &Path) -> PathBuf {
    write(
        dir,
        "bsc01.json",
        r#"{"inputs":2,"outputs":2,"rows":[[0.9,0.1],[0.1,0.9]]}"#,
    )
}

fn agreement(dir: &Path) -> PathBuf {
    write(
        dir,
        "agreement.json",
        r#"{"kind":"additive","table":[[1.0,0.0],[0.0,1.0]]}"#,
    )
}

fn antipodal_pair(dir: &Path) -> PathBuf {
    write(dir, "pair.json", r#"{"n":1,"words":[[0],[1]]}"#)
}

fn stdout_json(cmd: &mut Command) -> serde_json::Value {
    let out = cmd.assert().success().get_output().stdout.clone();
    serde_json::from_slice(&out).unwrap()
}

#[test]
fn lm_rate_matches_bsc_closed_form() {
    let dir = TempDir::new().unwrap();
    let report = stdout_json(
        mmcap()
            .arg("lm-rate")
            .arg("--channel")
            .arg(bsc01(dir.path()))
            .arg("--metric")
            .arg(agreement(dir.path())),
    );
    // Agreement counting is an increasing transform of the likelihood here,
    // so the rate is the matched capacity 1 - h2(0.1).
    let value = report["result"]["value"].as_f64().unwrap();
    assert!((value - 0.5310044064107189).abs() <= 1e-3, "value={value}");
    assert_eq!(report["tool"], "mmcap");
    assert_eq!(report["command"], "lm-rate");
    let digest = report["inputs"]["channel"]["sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
}

#[test]
fn reports_are_byte_identical_across_worker_counts() {
    let dir = TempDir::new().unwrap();
    let channel = bsc01(dir.path());
    let metric = agreement(dir.path());
    let mut outs = Vec::new();
    for workers in ["1", "4"] {
        let out = dir.path().join(format!("lm{workers}.json"));
        mmcap()
            .arg("--workers")
            .arg(workers)
            .arg("lm-rate")
            .arg("--channel")
            .arg(&channel)
            .arg("--metric")
            .arg(&metric)
            .arg("--output")
            .arg(&out)
            .assert()
            .success();
        outs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn exact_pe_of_antipodal_pair_on_bsc_is_the_crossover() {
    let dir = TempDir::new().unwrap();
    let report = stdout_json(
        mmcap()
            .arg("exact-pe")
            .arg("--channel")
            .arg(bsc01(dir.path()))
            .arg("--codebook")
            .arg(antipodal_pair(dir.path()))
            .arg("--metric")
            .arg(agreement(dir.path())),
    );
    let pe = report["result"]["pe"].as_f64().unwrap();
    assert!((pe - 0.1).abs() <= 1e-12, "pe={pe}");
}

#[test]
fn phi_reports_the_tail_mass_at_the_threshold() {
    let dir = TempDir::new().unwrap();
    let input = write(dir.path(), "unif.json", r#"{"kind":"iid","n":1,"pmf":[0.5,0.5]}"#);
    let report = stdout_json(
        mmcap()
            .arg("phi")
            .arg("--metric")
            .arg(agreement(dir.path()))
            .arg("--input")
            .arg(&input)
            .arg("--received")
            .arg("0")
            .arg("--threshold")
            .arg("0.5"),
    );
    // Only the matching symbol reaches agreement 1 >= 0.5, at mass 1/2.
    let phi = report["result"]["phi"].as_f64().unwrap();
    assert!((phi - 0.5).abs() <= 1e-15, "phi={phi}");
}

#[test]
fn verify_lemma1_exits_zero_on_a_clean_run() {
    mmcap()
        .arg("verify")
        .arg("lemma1")
        .arg("--seed")
        .arg("7")
        .arg("--instances")
        .arg("40")
        .assert()
        .success()
        .stdout(predicate::str::contains("\"passed\": true"));
}

#[test]
fn verify_expurgation_reports_failures_and_exits_one() {
    let out = mmcap()
        .arg("verify")
        .arg("expurgation")
        .assert()
        .code(1)
        .get_output()
        .stdout
        .clone();
    let report: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(report["result"]["passed"], false);
    assert!(report["result"]["failures"].as_u64().unwrap() > 0);
}

#[test]
fn usage_errors_exit_two() {
    mmcap().arg("run-suite").arg("nosuch").assert().code(2);
    mmcap().arg("lm-rate").assert().code(2);
    mmcap()
        .arg("lm-rate")
        .arg("--channel")
        .arg("does-not-exist.json")
        .arg("--metric")
        .arg("also-missing.json")
        .assert()
        .code(2)
        .stderr(predicate::str::contains("mmcap:"));
}

#[test]
fn spectrum_csv_has_one_sorted_row_per_trial() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("samples.csv");
    mmcap()
        .arg("spectrum")
        .arg("--stat")
        .arg("info-density")
        .arg("--channel")
        .arg(bsc01(dir.path()))
        .arg("--n")
        .arg("40")
        .arg("--trials")
        .arg("150")
        .arg("--seed")
        .arg("1")
        .arg("--output")
        .arg(&out)
        .assert()
        .success();
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# "));
    assert_eq!(lines[1], "value");
    let values: Vec<f64> = lines[2..]
        .iter()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(values.len(), 150);
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn spectrum_requires_a_metric_for_metric_statistics() {
    let dir = TempDir::new().unwrap();
    mmcap()
        .arg("spectrum")
        .arg("--stat")
        .arg("metric-value")
        .arg("--channel")
        .arg(bsc01(dir.path()))
        .arg("--n")
        .arg("10")
        .arg("--trials")
        .arg("100")
        .arg("--seed")
        .arg("1")
        .assert()
        .code(2)
        .stderr(predicate::str::contains("--metric"));
}

#[test]
fn validate_accepts_rounding_slack_and_rejects_bad_probabilities() {
    let dir = TempDir::new().unwrap();
    let good = write(
        dir.path(),
        "good.json",
        r#"{"inputs":2,"outputs":2,"rows":[[0.6,0.399999999],[0.5,0.5]]}"#,
    );
    let negative = write(
        dir.path(),
        "negative.json",
        r#"{"inputs":2,"outputs":2,"rows":[[1.2,-0.2],[0.5,0.5]]}"#,
    );
    let nan = write(
        dir.path(),
        "nan.json",
        r#"{"inputs":2,"outputs":2,"rows":[[NaN,1.0],[0.5,0.5]]}"#,
    );

    mmcap()
        .arg("validate")
        .arg(&good)
        .assert()
        .success()
        .stdout(predicate::str::contains("ok (channel"));

    let assert = mmcap()
        .arg("validate")
        .arg(&good)
        .arg(&negative)
        .arg(&nan)
        .assert()
        .code(1);
    let out = String::from_utf8(assert.get_output().stdout.clone()).unwrap();
    assert!(out.contains("good.json: ok"));
    assert!(out.contains("negative.json: invalid"));
    assert!(out.contains("nan.json: invalid"));
    assert!(out.contains("invalid JSON"));
}

#[test]
fn simulate_writes_one_outcome_per_trial_and_covers_the_true_rate() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("trials.csv");
    let report = stdout_json(
        mmcap()
            .arg("simulate")
            .arg("--channel")
            .arg(bsc01(dir.path()))
            .arg("--codebook")
            .arg(antipodal_pair(dir.path()))
            .arg("--metric")
            .arg(agreement(dir.path()))
            .arg("--trials")
            .arg("400")
            .arg("--seed")
            .arg("5")
            .arg("--per-trial-csv")
            .arg(&csv),
    );
    let ci = report["result"]["wilson_ci95"].as_array().unwrap();
    let (lo, hi) = (ci[0].as_f64().unwrap(), ci[1].as_f64().unwrap());
    assert!(lo <= 0.1 && 0.1 <= hi, "ci=[{lo},{hi}]");

    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 400);
    assert!(rows.iter().all(|r| *r == "0" || *r == "1"));
}
