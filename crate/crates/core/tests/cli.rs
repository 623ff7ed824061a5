use std::fs;
use std::path::Path;
use std::process::Command;

use westervelt::io::{Summary, SERIES_HEADER, SPECTRUM_HEADER};

fn westervelt(dir: &Path, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_westervelt"))
        .args(args)
        .current_dir(dir)
        .env_remove(westervelt::cli::OUT_ENV)
        .status()
        .expect("binary runs")
        .code()
        .unwrap_or(-1)
}

fn summary(path: &Path) -> Summary {
    Summary::parse(&fs::read_to_string(path).expect("summary written"))
}

const EQUILIBRIUM: &str =
    "[run]\nexperiment = simulate\nt_end = 0.2\n\n[grid]\nnx = 17\n\n[initial]\nrecipe = equilibrium\nr = 0.3\n";

#[test]
fn simulate_writes_series_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("eq.cfg"), EQUILIBRIUM).unwrap();
    assert_eq!(
        westervelt(tmp.path(), &["simulate", "--config", "eq.cfg", "--out", "run"]),
        0
    );
    let series = fs::read_to_string(tmp.path().join("run/series.csv")).unwrap();
    assert_eq!(series.lines().next(), Some(SERIES_HEADER));
    assert_eq!(series.lines().count(), 22);
    let s = summary(&tmp.path().join("run/summary.txt"));
    assert_eq!(s.get("status"), Some("completed"));
    assert_eq!(s.get("steps"), Some("20"));
    assert_eq!(s.get("drift").map(|d| d.parse::<f64>().unwrap()), Some(0.0));
}

#[test]
fn output_directory_comes_from_config_when_not_overridden() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("eq.cfg"),
        EQUILIBRIUM.replace("t_end = 0.2", "t_end = 0.2\noutput = from-config"),
    )
    .unwrap();
    assert_eq!(westervelt(tmp.path(), &["simulate", "--config", "eq.cfg"]), 0);
    assert!(tmp.path().join("from-config/summary.txt").is_file());
}

#[test]
fn solver_failure_is_recorded_in_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = EQUILIBRIUM.replace("recipe = equilibrium\nr = 0.3", "recipe = cosine\namplitude = 0.5")
        + "\n[stepper]\ndt = 0.2\nnewton_max_iter = 1\n";
    fs::write(tmp.path().join("hard.cfg"), cfg).unwrap();
    assert_eq!(
        westervelt(tmp.path(), &["simulate", "--config", "hard.cfg", "--out", "run"]),
        2
    );
    let s = summary(&tmp.path().join("run/summary.txt"));
    assert_eq!(s.get("status"), Some("failed"));
    assert_eq!(s.get("error_kind"), Some("newton_divergence"));
}

#[test]
fn spectrum_flags_a_single_zero() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        westervelt(
            tmp.path(),
            &["spectrum", "--n", "12", "--dim", "2", "--r", "0.2", "--out", "s"]
        ),
        0
    );
    let csv = fs::read_to_string(tmp.path().join("s/spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(SPECTRUM_HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 144 + 100);
    assert_eq!(rows.iter().filter(|r| r.ends_with(",true")).count(), 1);
}

#[test]
fn unknown_config_key_names_the_nearest_one() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("typo.cfg"), EQUILIBRIUM.replace("nx = 17", "nxx = 17")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_westervelt"))
        .args(["simulate", "--config", "typo.cfg", "--out", "run"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nearest valid key: nx"), "{stderr}");
}
