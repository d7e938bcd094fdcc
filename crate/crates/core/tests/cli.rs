use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_metricdp"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is a JSON error")
}

fn workspace() -> TempDir {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    write(
        p,
        "db.csv",
        "dim=2\n0.1,0.2\n0.9,0.4\n0.5,0.5\n0.3,0.8\n0.7,0.1\n",
    );
    write(p, "q.csv", "dim=2\n0.0,0.0\n0.5,0.5\n1.0,1.0\n0.25,0.75\n");
    write(
        p,
        "free.json",
        r#"{"epsilon": 1.0, "k_max": 10, "noise": "off", "alpha": 0.2, "seed": 3}"#,
    );
    write(
        p,
        "noisy.json",
        r#"{"epsilon": 1.0, "k_max": 10, "seed": 3}"#,
    );
    write(
        p,
        "m.csv",
        "labels=a,b,c,d\n0,1,2,1.5\n1,0,1,1\n2,1,0,0.5\n1.5,1,0.5,0\n",
    );
    write(p, "ldb.csv", "labels\na\nb\nb\nd\n");
    write(p, "lq.csv", "labels\na\nc\nd\n");
    dir
}

#[test]
fn release_l1_noise_free_matches_oracle() {
    let dir = workspace();
    let p = dir.path();
    let out = run(
        p,
        &[
            "release-l1",
            "--db",
            "db.csv",
            "--queries",
            "q.csv",
            "--config",
            "free.json",
            "--with-oracle",
            "--out",
            "a.jsonl",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = stdout_json(&out);
    assert_eq!(report["aggregates"]["queries"], 4);
    assert!(report["aggregates"]["max_error"].as_f64().unwrap() <= 0.2);
    assert_eq!(report["provenance"]["mechanism"], "l1_interactive");
    let lines = fs::read_to_string(p.join("a.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 4);

    let out = run(
        p,
        &[
            "oracle",
            "--db",
            "db.csv",
            "--queries",
            "q.csv",
            "--out",
            "o.jsonl",
        ],
    );
    assert!(out.status.success());
    let out = run(
        p,
        &[
            "compare",
            "--answers",
            "a.jsonl",
            "--oracle",
            "o.jsonl",
            "--bound",
            "0.2",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout_json(&out)["max"].as_f64().unwrap() <= 0.2);
}

#[test]
fn compare_reports_threshold_and_length_errors() {
    let dir = workspace();
    let p = dir.path();
    write(p, "x.jsonl", "{\"value\":0.5}\n{\"value\":0.1}\n");
    write(p, "y.jsonl", "{\"value\":0.1}\n{\"value\":0.1}\n");
    write(p, "z.jsonl", "{\"value\":0.1}\n");
    let out = run(
        p,
        &[
            "compare",
            "--answers",
            "x.jsonl",
            "--oracle",
            "y.jsonl",
            "--bound",
            "0.1",
        ],
    );
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["error"]["kind"], "threshold");
    let out = run(
        p,
        &["compare", "--answers", "x.jsonl", "--oracle", "z.jsonl"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "length_mismatch");
}

#[test]
fn infeasible_calibration_exits_three() {
    let dir = workspace();
    let p = dir.path();
    let out = run(
        p,
        &[
            "release-l1",
            "--db",
            "db.csv",
            "--queries",
            "q.csv",
            "--config",
            "noisy.json",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "infeasible");
    assert!(err["error"]["minimal_alpha"].as_f64().unwrap() > 2.0);
}

#[test]
fn validation_errors_are_json() {
    let dir = workspace();
    let p = dir.path();
    write(p, "bad.csv", "dim=2\n0.1,0.2\n0.3,1.7\n");
    let out = run(
        p,
        &[
            "release-l1",
            "--db",
            "bad.csv",
            "--queries",
            "q.csv",
            "--config",
            "free.json",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr_json(&out)["error"]["message"]
        .as_str()
        .unwrap()
        .to_string();
    assert!(msg.contains("bad.csv") && msg.contains("line 3"), "{msg}");

    let out = run(p, &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "usage");

    write(
        p,
        "extra.json",
        r#"{"epsilon": 1.0, "k_max": 10, "colour": 2}"#,
    );
    let out = run(
        p,
        &[
            "release-l1",
            "--db",
            "db.csv",
            "--queries",
            "q.csv",
            "--config",
            "extra.json",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "config");
}

#[test]
fn offline_synopsis_roundtrip_is_deterministic() {
    let dir = workspace();
    let p = dir.path();
    for name in ["s1.json", "s2.json"] {
        let out = run(
            p,
            &[
                "release-offline",
                "--db",
                "db.csv",
                "--config",
                "free.json",
                "--out",
                name,
            ],
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let s1 = fs::read(p.join("s1.json")).unwrap();
    assert_eq!(s1, fs::read(p.join("s2.json")).unwrap());
    let out = run(
        p,
        &[
            "answer",
            "--synopsis",
            "s1.json",
            "--queries",
            "q.csv",
            "--db",
            "db.csv",
            "--with-oracle",
            "--out",
            "ans.jsonl",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = stdout_json(&out);
    let alpha = report["aggregates"]["alpha"].as_f64().unwrap();
    assert!((alpha - 0.2).abs() < 1e-12);
    assert!(report["aggregates"]["max_error"].as_f64().unwrap() <= alpha);
}

#[test]
fn embed_writes_proxy_and_sidecar() {
    let dir = workspace();
    let p = dir.path();
    let out = run(
        p,
        &[
            "embed",
            "--kind",
            "bourgain",
            "--db",
            "ldb.csv",
            "--queries",
            "lq.csv",
            "--metric",
            "m.csv",
            "--seed",
            "9",
            "--out",
            "proxy.csv",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let proxy = fs::read_to_string(p.join("proxy.csv")).unwrap();
    let mut lines = proxy.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("dim="));
    assert_eq!(lines.count(), 4);
    let sidecar: Value =
        serde_json::from_str(&fs::read_to_string(p.join("proxy.csv.json")).unwrap()).unwrap();
    assert_eq!(sidecar["kind"], "bourgain");
    assert_eq!(sidecar["seed"], 9);
    assert_eq!(sidecar["levels"], 2);

    let out = run(
        p,
        &[
            "embed",
            "--kind",
            "projection",
            "--db",
            "db.csv",
            "--queries",
            "q.csv",
            "--metric-kind",
            "l2",
            "--seed",
            "9",
            "--out",
            "pp.csv",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let sidecar: Value =
        serde_json::from_str(&fs::read_to_string(p.join("pp.csv.json")).unwrap()).unwrap();
    assert_eq!(sidecar["kind"], "projection");
    assert_eq!(sidecar["c0"], 4.0);
}

#[test]
fn release_metric_brackets_oracle() {
    let dir = workspace();
    let p = dir.path();
    let out = run(
        p,
        &[
            "release-metric",
            "--kind",
            "bourgain",
            "--db",
            "ldb.csv",
            "--queries",
            "lq.csv",
            "--metric",
            "m.csv",
            "--config",
            "free.json",
            "--with-oracle",
            "--out",
            "r.jsonl",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(p.join("r.jsonl")).unwrap();
    for line in text.lines() {
        let r: Value = serde_json::from_str(line).unwrap();
        let oracle = r["oracle"].as_f64().unwrap();
        assert!(r["lower"].as_f64().unwrap() <= oracle + 1e-12, "{line}");
        assert!(oracle <= r["upper"].as_f64().unwrap() + 1e-12, "{line}");
    }
    // The matrix violates nothing, but the check can be skipped.
    let out = run(
        p,
        &[
            "oracle",
            "--db",
            "ldb.csv",
            "--queries",
            "lq.csv",
            "--metric",
            "m.csv",
            "--no-triangle-check",
        ],
    );
    assert!(out.status.success());
}

#[test]
fn triangle_violation_is_rejected() {
    let dir = workspace();
    let p = dir.path();
    write(p, "tri.csv", "labels=a,b,c\n0,1,3\n1,0,1\n3,1,0\n");
    write(p, "t.csv", "labels\na\nc\n");
    let out = run(
        p,
        &[
            "oracle",
            "--db",
            "t.csv",
            "--queries",
            "t.csv",
            "--metric",
            "tri.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = run(
        p,
        &[
            "oracle",
            "--db",
            "t.csv",
            "--queries",
            "t.csv",
            "--metric",
            "tri.csv",
            "--no-triangle-check",
        ],
    );
    assert!(out.status.success());
}
