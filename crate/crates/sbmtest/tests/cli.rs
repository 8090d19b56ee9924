use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sbmtest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbmtest")).args(args).output().unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_spec(dir: &Path, name: &str, n: usize, sizes: &[usize], p: f64, q: f64) -> PathBuf {
    let path = dir.join(name);
    let doc = serde_json::json!({
        "n": n,
        "K": sizes.len(),
        "block_sizes": sizes,
        "intra": {"kind": "bernoulli", "params": {"p": p}},
        "inter": {"kind": "bernoulli", "params": {"p": q}},
    });
    std::fs::write(&path, doc.to_string()).unwrap();
    path
}

fn error_kind(out: &Output) -> String {
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    v["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn ingest_golden_fixture_is_byte_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let status = sbmtest(&[
        "ingest",
        "--edges",
        s(&fixture("enron_small.tsv")),
        "--cap",
        "127",
        "--split-date-column",
        "none",
        "--out",
        s(&out),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(fixture("enron_small.expected.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(dir.path().join("g.nodes.tsv")).unwrap(),
        std::fs::read(fixture("enron_small.expected.nodes.tsv")).unwrap()
    );
}

#[test]
fn ingest_rejects_date_splitting() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbmtest(&[
        "ingest",
        "--edges",
        s(&fixture("enron_small.tsv")),
        "--split-date-column",
        "3",
        "--out",
        s(&dir.path().join("g.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "usage");
}

#[test]
fn generate_then_test_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "spec.json", 300, &[200, 100], 0.5, 0.1);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for (seed, path) in [("1", &a), ("2", &b)] {
        let out = sbmtest(&["generate", "--spec", s(&spec), "--seed", seed, "--out", s(path)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let args = ["test", "--graph1", s(&a), "--graph2", s(&b), "--k", "2", "--alpha", "0.05"];
    let first = sbmtest(&args);
    let second = sbmtest(&args);
    assert!(matches!(first.status.code(), Some(0 | 3)));
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.status.code(), second.status.code());
    let report: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(report["n"], 300);
    assert_eq!(report["K"], 2);
    let expected = if report["reject"].as_bool().unwrap() { 3 } else { 0 };
    assert_eq!(first.status.code(), Some(expected));

    let oracle = format!("oracle:{}", s(&spec));
    let out = sbmtest(&["test", "--graph1", s(&a), "--graph2", s(&b), "--k", "2", "--moments", &oracle]);
    assert!(matches!(out.status.code(), Some(0 | 3)));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["moments"]["source"], "oracle");
}

#[test]
fn different_memberships_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "spec.json", 300, &[150, 150], 0.5, 0.1);
    let a = dir.path().join("a.csv");
    sbmtest(&["generate", "--spec", s(&spec), "--seed", "1", "--out", s(&a)]);
    let spec2 = dir.path().join("spec2.json");
    let labels: Vec<usize> = (0..300).map(|i| if (i / 75) % 2 == 0 { 1 } else { 2 }).collect();
    let doc = serde_json::json!({
        "n": 300, "K": 2, "block_sizes": [150, 150], "labels": labels,
        "intra": {"kind": "bernoulli", "params": {"p": 0.5}},
        "inter": {"kind": "bernoulli", "params": {"p": 0.1}},
    });
    std::fs::write(&spec2, doc.to_string()).unwrap();
    let b = dir.path().join("b.csv");
    sbmtest(&["generate", "--spec", s(&spec2), "--seed", "2", "--out", s(&b)]);
    let out = sbmtest(&["test", "--graph1", s(&a), "--graph2", s(&b), "--k", "2"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn mismatched_sizes_fail_without_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let s1 = write_spec(dir.path(), "s1.json", 200, &[100, 100], 0.5, 0.1);
    let s2 = write_spec(dir.path(), "s2.json", 210, &[105, 105], 0.5, 0.1);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    sbmtest(&["generate", "--spec", s(&s1), "--seed", "1", "--out", s(&a)]);
    sbmtest(&["generate", "--spec", s(&s2), "--seed", "1", "--out", s(&b)]);
    let out = sbmtest(&["test", "--graph1", s(&a), "--graph2", s(&b), "--k", "2"]);
    assert_eq!(out.status.code(), Some(6));
    assert!(out.stdout.is_empty());
    assert_eq!(error_kind(&out), "dimension_mismatch");
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = sbmtest(&["test", "--graph1", "/nonexistent/a.csv", "--graph2", "/nonexistent/b.csv", "--k", "2"]);
    assert_eq!(missing.status.code(), Some(4));
    assert_eq!(error_kind(&missing), "io");

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "0,1\n0,x\n1,0\n").unwrap();
    let out = sbmtest(&["test", "--graph1", s(&bad), "--graph2", s(&bad), "--k", "2"]);
    assert_eq!(out.status.code(), Some(5));

    let usage = sbmtest(&["test", "--graph1", s(&bad)]);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(error_kind(&usage), "usage");

    let spec = write_spec(dir.path(), "bad_spec.json", 10, &[9, 1], 0.5, 0.1);
    let out = sbmtest(&["generate", "--spec", s(&spec), "--out", s(&dir.path().join("g.csv"))]);
    assert_eq!(out.status.code(), Some(7));
}

#[test]
fn cluster_writes_membership_and_embedding() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "spec.json", 200, &[100, 100], 0.6, 0.05);
    let g = dir.path().join("g.csv");
    sbmtest(&["generate", "--spec", s(&spec), "--seed", "3", "--out", s(&g)]);
    let emb = dir.path().join("emb.csv");
    for embedding in ["adjacency", "laplacian"] {
        let out = sbmtest(&[
            "cluster",
            "--graph",
            s(&g),
            "--k",
            "2",
            "--embedding",
            embedding,
            "--seed",
            "1",
            "--dump-embedding",
            s(&emb),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let text = String::from_utf8(out.stdout).unwrap();
        let labels: Vec<&str> = text.lines().map(|l| l.split('\t').nth(1).unwrap()).collect();
        assert_eq!(labels.len(), 200);
        assert!(labels[..100].iter().all(|&l| l == labels[0]));
        assert!(labels[100..].iter().all(|&l| l == labels[100]));
        assert_ne!(labels[0], labels[100]);
        let dump = std::fs::read_to_string(&emb).unwrap();
        assert!(dump.starts_with("node,x1,x2\n"));
        assert_eq!(dump.lines().count(), 201);
    }
}

#[test]
fn test_aligns_node_universes() {
    let dir = tempfile::tempdir().unwrap();
    let e1 = dir.path().join("e1.tsv");
    let e2 = dir.path().join("e2.tsv");
    let mut t1 = String::new();
    let mut t2 = String::new();
    for i in 0..40 {
        for j in i + 1..40 {
            let same = (i < 20) == (j < 20);
            if same && (i * 7 + j * 3) % 3 != 0 || !same && (i + j) % 9 == 0 {
                t1.push_str(&format!("n{i}\tn{j}\t1\n"));
                if i != 0 && j != 0 {
                    t2.push_str(&format!("n{j}\tn{i}\t1\n"));
                }
            }
        }
    }
    std::fs::write(&e1, t1).unwrap();
    std::fs::write(&e2, t2).unwrap();
    let (g1, g2) = (dir.path().join("g1.csv"), dir.path().join("g2.csv"));
    for (e, g) in [(&e1, &g1), (&e2, &g2)] {
        let out = sbmtest(&["ingest", "--edges", s(e), "--out", s(g)]);
        assert!(out.status.success());
    }
    let out = sbmtest(&[
        "test",
        "--graph1",
        s(&g1),
        "--graph2",
        s(&g2),
        "--k",
        "2",
        "--nodes1",
        s(&dir.path().join("g1.nodes.tsv")),
        "--nodes2",
        s(&dir.path().join("g2.nodes.tsv")),
    ]);
    assert!(matches!(out.status.code(), Some(0 | 3)), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["n"], 40);
}

#[test]
fn simulate_writes_tables_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.toml");
    std::fs::write(
        &grid,
        r#"
mode = "type1"
block_ratio = [2, 1]
intra = { kind = "bernoulli", params = { p = 0.5 } }
inter = { kind = "bernoulli", params = { p = 0.1 } }
ns = [150]
gammas = [1.0, 3.0]
replicates = 5
seed = 11
"#,
    )
    .unwrap();
    let (o1, o2) = (dir.path().join("r1"), dir.path().join("r2"));
    for o in [&o1, &o2] {
        let out = sbmtest(&["simulate", "--grid", s(&grid), "--out", s(o)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["result.json", "cells.csv", "table.csv"] {
        assert_eq!(std::fs::read(o1.join(f)).unwrap(), std::fs::read(o2.join(f)).unwrap(), "{f}");
    }
    let table = std::fs::read_to_string(o1.join("table.csv")).unwrap();
    assert!(table.starts_with("n,gamma=1,gamma=3\n150,"));
    assert!(table.trim_end().ends_with("--"));
    assert!(o1.join("timing.json").exists());
}
