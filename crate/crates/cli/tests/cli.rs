use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tiny.toml")
}

fn allocq(dir: &Path, args: &[&str]) -> Output {
    allocq_env(dir, args, &[])
}

fn allocq_env(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_allocq"));
    cmd.current_dir(dir).arg("--config").arg(fixture()).arg("--quiet").args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("allocq runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "exit {:?}\n{}", out.status.code(), String::from_utf8_lossy(&out.stderr));
}

fn json(path: PathBuf) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().parse().unwrap()).collect()
}

#[test]
fn full_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = dir.join("allocq-out");

    ok(&allocq(dir, &["solve"]));
    let first = json(out.join("manifest.json"));
    assert_eq!(first["stages"][0]["name"], "solve_equilibrium");
    assert_eq!(first["stages"][0]["cache_hit"], false);
    assert!(!first["cache_files"].as_array().unwrap().is_empty());

    ok(&allocq(dir, &["solve"]));
    let second = json(out.join("manifest.json"));
    assert_eq!(second["stages"][0]["name"], "load_equilibrium");
    assert_eq!(second["stages"][0]["cache_hit"], true);
    assert_eq!(first["config_hash"], second["config_hash"]);

    ok(&allocq(dir, &["build-inputs", "--all"]));
    let manifest = json(out.join("manifest.json"));
    for f in manifest["outputs"].as_array().unwrap() {
        assert!(out.join(f.as_str().unwrap()).is_file(), "{f}");
    }
    assert!(out.join("mpc_apc.csv").is_file());

    ok(&allocq(dir, &["allocate"]));
    let summary = json(out.join("summary.json"));
    assert!(summary["objective"].as_f64().unwrap() >= summary["replica_objective"].as_f64().unwrap());
    let rev = summary["REV"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&rev));
    let header = std::fs::read_to_string(out.join("allocations.csv")).unwrap();
    assert!(header.starts_with("group_id,m,k,income_lo,income_hi,D_star,dollars\n"));

    ok(&allocq(dir, &["allocate", "--budget", "0"]));
    assert!(column(&out.join("allocations.csv"), "D_star").iter().all(|&d| d == 0.0));

    let budget = "400";
    ok(&allocq(dir, &["allocate", "--budget", budget, "--lambda", "1"]));
    let utilitarian = column(&out.join("allocations.csv"), "D_star");
    ok(&allocq(dir, &["allocate", "--budget", budget, "--lambda", "-1"]));
    let averse = column(&out.join("allocations.csv"), "D_star");
    assert_ne!(utilitarian, averse);

    ok(&allocq(dir, &["allocate", "--budget", budget, "--mode", "stop"]));
    let stop = json(out.join("summary.json"))["objective"].as_f64().unwrap();
    ok(&allocq(dir, &["allocate", "--budget", budget, "--mode", "skip"]));
    let skip = json(out.join("summary.json"))["objective"].as_f64().unwrap();
    assert!(skip >= stop);

    let caps_too_tight = allocq(dir, &["allocate", "--caps", "100,100"]);
    assert_eq!(caps_too_tight.status.code(), Some(4));

    ok(&allocq(dir, &["rev-table"]));
    let revs = column(&out.join("rev_table.csv"), "REV");
    assert_eq!(revs.len(), 7);
    assert!(revs.iter().all(|r| (0.0..=1.0).contains(r)));

    let bands = |args: &[&str]| {
        let mut a = vec!["bands", "--scenario", "welfare2021"];
        a.extend_from_slice(args);
        ok(&allocq(dir, &a));
        std::fs::read(out.join("bands.csv")).unwrap()
    };
    let a = bands(&["--seed", "11", "--draws", "30"]);
    let b = bands(&["--seed", "11", "--draws", "30"]);
    assert_eq!(a, b);
    bands(&["--sigma", "0", "--draws", "5"]);
    let bench = column(&out.join("bands.csv"), "benchmark");
    assert_eq!(column(&out.join("bands.csv"), "lower"), bench);
    assert_eq!(column(&out.join("bands.csv"), "upper"), bench);
    bands(&["--draws", "1"]);
    assert_eq!(column(&out.join("bands.csv"), "lower"), column(&out.join("bands.csv"), "upper"));

    ok(&allocq(dir, &["export-queue", "--lambda", "-1"]));
    let queue = std::fs::read_to_string(out.join("queue.csv")).unwrap();
    assert!(queue.starts_with("rank,group_id,increment_index,key,cumulative_cost\n"));
}

#[test]
fn bench_smoke() {
    let tmp = tempfile::tempdir().unwrap();
    let out = allocq(tmp.path(), &["bench", "--groups", "10", "--increments", "10"]);
    ok(&out);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["keys"], 100);
    assert!(report["queue_seconds"].as_f64().unwrap() < 0.5);
    assert!(tmp.path().join("allocq-out/bench.json").is_file());
}

#[test]
fn configuration_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = allocq_env(dir, &["solve"], &[("ALLOCQ_MODEL__GAMMA", "1")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
    assert!(!dir.join("allocq-cache").exists(), "nothing is solved for an invalid config");

    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "[model]\ngamma = 2.0\n\n[scenario]\nlamda = 0.5\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_allocq"))
        .current_dir(dir)
        .args(["--config", bad.to_str().unwrap(), "solve"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("lamda") && err.contains("line 5"), "{err}");
}

#[test]
fn missing_matrix_points_to_solve() {
    let tmp = tempfile::tempdir().unwrap();
    let out = allocq(tmp.path(), &["allocate"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("allocq solve") && err.contains("build-inputs"), "{err}");
}

#[test]
fn sample_config_loads() {
    let tmp = tempfile::tempdir().unwrap();
    let desk = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml");
    let out = Command::new(env!("CARGO_BIN_EXE_allocq"))
        .current_dir(tmp.path())
        .args(["--quiet", "--config", desk.to_str().unwrap(), "bench", "--groups", "3", "--increments", "3"])
        .output()
        .unwrap();
    ok(&out);
}
