use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mulane(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mulane"))
        .args(args)
        .env("RUST_LOG", "info")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// Two overlapping layers (a triangle and a path sharing node 3) and a disjoint copy.
fn toy(dir: &Path) -> (PathBuf, PathBuf) {
    fs::write(dir.join("tri.tsv"), "1 2\n2 3\n3 1\n").unwrap();
    fs::write(dir.join("path.tsv"), "3 4\n4 5\n").unwrap();
    fs::write(dir.join("other.tsv"), "6 7\n7 8\n").unwrap();
    fs::write(
        dir.join("overlap.json"),
        r#"{"layers": [{"name": "tri", "edges": "tri.tsv", "cap": 4},
                       {"name": "path", "edges": "path.tsv", "cap": 4}],
            "symmetrize": true}"#,
    )
    .unwrap();
    fs::write(
        dir.join("disjoint.json"),
        r#"{"layers": [{"name": "tri", "edges": "tri.tsv", "cap": 4},
                       {"name": "other", "edges": "other.tsv", "cap": 4}],
            "symmetrize": true}"#,
    )
    .unwrap();
    (dir.join("overlap.json"), dir.join("disjoint.json"))
}

#[test]
fn help_documents_every_flag() {
    let out = mulane(&["simulate", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for flag in [
        "--config", "--manifest", "--caps", "--alpha", "--weights", "--seed", "--algo", "--budget", "--rounds", "--runs", "--gamma",
        "--epsilon", "--oracle", "--arms", "--beg-variant", "--out", "--verbose",
    ] {
        assert!(text.contains(flag), "missing {flag}");
    }
    assert_eq!(mulane(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(mulane(&[]).status.code(), Some(1));
    assert_eq!(mulane(&["solve", "--bogus"]).status.code(), Some(1));
    assert_eq!(mulane(&["solve", "--budget", "x"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let (overlap, _) = toy(dir.path());
    let m = overlap.to_str().unwrap();
    assert_eq!(mulane(&["solve", "--manifest", m, "--budget", "3"]).status.code(), Some(1));
    assert_eq!(mulane(&["solve", "--manifest", m, "--algo", "nope", "--budget", "3"]).status.code(), Some(1));
    let out_dir = dir.path().join("never");
    let out = mulane(&["simulate", "--manifest", m, "--algo", "cucb-max", "--budget", "3", "--gamma", "2", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_dir.exists());
}

#[test]
fn solve_emits_a_result_and_rejects_dp_on_overlap() {
    let dir = tempfile::tempdir().unwrap();
    let (overlap, disjoint) = toy(dir.path());
    let out = mulane(&["solve", "--manifest", overlap.to_str().unwrap(), "--algo", "beg", "--budget", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["algo"], "beg");
    assert_eq!(v["allocation"].as_array().unwrap().len(), 2);
    assert!(v["reward"].as_f64().unwrap() > 0.0);
    assert!(v["millis"].as_f64().unwrap() >= 0.0);

    let out = mulane(&["solve", "--manifest", overlap.to_str().unwrap(), "--algo", "dp", "--budget", "4"]);
    assert_eq!(out.status.code(), Some(2));
    let out = mulane(&["solve", "--manifest", disjoint.to_str().unwrap(), "--algo", "dp,opt", "--budget", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v[0]["reward"], v[1]["reward"]);
}

#[test]
fn sweep_writes_rows_per_budget_and_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let (overlap, _) = toy(dir.path());
    let csv = dir.path().join("sweep.csv");
    let out = mulane(&[
        "solve", "--manifest", overlap.to_str().unwrap(), "--algo", "beg,bege,prop-s", "--sweep", "2:6:2", "--caps", "equal-to-b",
        "--out", csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "B,algo,reward,millis");
    assert_eq!(lines.len(), 1 + 3 * 3);
    for row in &lines[1..] {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 4);
        assert!(["2", "4", "6"].contains(&cols[0]));
        assert!(cols[3].parse::<f64>().unwrap() >= 0.0);
    }
}

#[test]
fn precompute_caches_and_recovers_from_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let (overlap, _) = toy(dir.path());
    let cache = dir.path().join("cache");
    let args = ["precompute", "--manifest", overlap.to_str().unwrap(), "--cache", cache.to_str().unwrap()];
    let first = mulane(&args);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let stats: serde_json::Value = serde_json::from_str(&stdout(&first)).unwrap();
    assert_eq!(stats["cache_hit"], false);
    assert_eq!(stats["layers"].as_array().unwrap().len(), 2);
    assert_eq!(stats["layers"][0]["n"], 3);
    assert!(cache.join("stats.json").exists());

    let second = mulane(&args);
    let stats2: serde_json::Value = serde_json::from_str(&stdout(&second)).unwrap();
    assert_eq!(stats2["cache_hit"], true);
    assert!(stderr(&second).contains("cache hit"));

    let file = PathBuf::from(stats["cache_file"].as_str().unwrap());
    fs::write(&file, b"MULANEVP garbage").unwrap();
    let third = mulane(&args);
    assert_eq!(third.status.code(), Some(0));
    assert!(stderr(&third).contains("corrupt"));
    let stats3: serde_json::Value = serde_json::from_str(&stdout(&third)).unwrap();
    assert_eq!(stats3["cache_hit"], false);
    assert_eq!(mulane(&args).status.code(), Some(0));

    let cached = mulane(&[
        "solve", "--manifest", overlap.to_str().unwrap(), "--algo", "bege", "--budget", "4", "--cache", cache.to_str().unwrap(),
    ]);
    let plain = mulane(&["solve", "--manifest", overlap.to_str().unwrap(), "--algo", "bege", "--budget", "4"]);
    let a: serde_json::Value = serde_json::from_str(&stdout(&cached)).unwrap();
    let b: serde_json::Value = serde_json::from_str(&stdout(&plain)).unwrap();
    assert_eq!(a["allocation"], b["allocation"]);
    assert_eq!(a["reward"], b["reward"]);
}

#[test]
fn missing_files_exit_three() {
    let out = mulane(&["solve", "--manifest", "/nonexistent/m.json", "--algo", "beg", "--budget", "2"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let (_, disjoint) = toy(dir.path());
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"manifest": "{}", "algo": "cucb-mg", "budget": 3, "rounds": 40, "runs": 2, "seed": 5, "weights": "random3"}}"#,
            disjoint.display()
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = mulane(&["simulate", "--config", cfg.to_str().unwrap(), "--rounds", "25", "--verbose", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("regret.csv")).unwrap();
    assert!(csv.starts_with("round,mean_regret,ci_low,ci_high\n"));
    assert_eq!(csv.lines().count(), 26);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["rounds"], 25);
    assert_eq!(summary["algo"], "cucb-mg");
    assert_eq!(fs::read_to_string(out_dir.join("trace.jsonl")).unwrap().lines().count(), 50);

    fs::write(&cfg, r#"{"budget": 3, "colour": "red"}"#).unwrap();
    let out = mulane(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (overlap, _) = toy(dir.path());
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = mulane(&[
            "simulate", "--manifest", overlap.to_str().unwrap(), "--algo", "ts", "--budget", "3", "--rounds", "50", "--runs", "2",
            "--seed", "7", "--out", out_dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        fs::read(out_dir.join("regret.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}
