use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: [&str; 8] = [
    "--set",
    "split.repeats=2",
    "--set",
    "synth.units=2",
    "--set",
    "synth.months=168",
    "--set",
    "learners.ann.rprop.max_epochs=200",
];

fn vcistack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vcistack")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = vcistack(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn small(args: &[&str]) -> Vec<String> {
    args.iter().chain(SMALL.iter()).map(|s| s.to_string()).collect()
}

fn as_str(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn tree(root: &Path, dir: &str) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(root.join(dir))
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn enumerate_default_catalog_prints_244_formulas() {
    let stdout = ok(&["enumerate", "--catalog", "default"]);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 244);
    let unique: std::collections::BTreeSet<_> = lines.iter().collect();
    assert_eq!(unique.len(), 244);
}

#[test]
fn synth_then_run_matches_inline_synth() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("panel.csv");
    let inline = tmp.path().join("inline");
    let staged = tmp.path().join("staged");
    ok(&as_str(&small(&["synth", "--seed", "4", "--output", csv.to_str().unwrap()])));
    ok(&as_str(&small(&["run", "--seed", "4", "--out", inline.to_str().unwrap()])));
    let input = format!("input={:?}", csv.to_str().unwrap());
    ok(&as_str(&small(&["run", "--seed", "4", "--out", staged.to_str().unwrap(), "--set", &input])));
    for dir in ["models", "gate", "prune", "ensemble", "evaluation", "report"] {
        assert_eq!(tree(&inline, dir), tree(&staged, dir), "{dir}");
    }

    // the copied config resumes without repeating finished stages
    let cfg = staged.join("config.toml");
    let out = vcistack(&["report", "--config", cfg.to_str().unwrap(), "--out", staged.to_str().unwrap()]);
    assert!(out.status.success());
    let log = String::from_utf8_lossy(&out.stderr);
    assert!(log.contains("train: up to date"), "{log}");
}

#[test]
fn gate_counts_reconcile_with_registry() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("g");
    let stdout = ok(&as_str(&small(&[
        "gate",
        "--out",
        out.to_str().unwrap(),
        "--r2-min",
        "0.7",
        "--overfit-tol",
        "0.03",
    ])));
    let mut lines = stdout.lines();
    let total: usize = lines.next().unwrap().strip_prefix("total ").unwrap().parse().unwrap();
    let kept: usize = lines.next().unwrap().strip_prefix("kept ").unwrap().parse().unwrap();
    let dropped: Vec<&str> = lines.collect();
    assert_eq!(kept + dropped.len(), total);
    assert!(dropped
        .iter()
        .all(|l| l.starts_with("dropped below_cutoff ") || l.starts_with("dropped overfit ")));

    let mut r = csv::Reader::from_path(out.join("models/index.csv")).unwrap();
    let tech = r.headers().unwrap().iter().position(|h| h == "technique").unwrap();
    let ann = r.records().filter(|rec| &rec.as_ref().unwrap()[tech] == "ann").count();
    assert_eq!(total, ann);
    let ranked = fs::read_to_string(out.join("gate/ranked.txt")).unwrap();
    assert_eq!(ranked.lines().count(), kept);
    assert!(!out.join("prune").exists());

    // a stricter cutoff re-gates without retraining
    let out2 = vcistack(&[
        "gate",
        "--config",
        out.join("config.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--r2-min",
        "0.9",
    ]);
    assert!(out2.status.success());
    let log = String::from_utf8_lossy(&out2.stderr);
    assert!(log.contains("train: up to date") && log.contains("gate: ran"), "{log}");
    let stricter: usize = String::from_utf8_lossy(&out2.stdout)
        .lines()
        .nth(1)
        .unwrap()
        .strip_prefix("kept ")
        .unwrap()
        .parse()
        .unwrap();
    assert!(stricter <= kept);
}

#[test]
fn exit_codes_follow_error_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("e");
    let o = out.to_str().unwrap();
    let code = |args: &[&str]| vcistack(args).status.code().unwrap();
    assert_eq!(code(&["ingest", "--out", o, "--set", "no_such_key=1"]), 2);
    assert_eq!(code(&["ingest", "--out", o, "--config", "/nonexistent/config.toml"]), 2);
    assert_eq!(code(&["gate", "--out", o, "--r2-min", "1.5"]), 2);
    assert_eq!(code(&["ingest", "--out", o, "--set", "input=\"/nonexistent/panel.csv\""]), 3);
    let stderr = String::from_utf8(vcistack(&["run", "--out", o, "--set", "synth.months=96"]).stderr).unwrap();
    assert!(stderr.contains("stage `indices` failed"), "{stderr}");
    assert!(stderr.contains("resume with: vcistack indices --config"), "{stderr}");
    assert_eq!(code(&["run", "--out", o, "--set", "synth.months=96"]), 3);
}
