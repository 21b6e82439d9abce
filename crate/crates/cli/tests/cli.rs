use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_career-forge");

const TINY: &str = r#"{
  "generator": {"n_scholars": 60, "star_fraction": 0.3},
  "features": {"node2vec": {"walk_length": 6, "walks_per_node": 1, "dimensions": 8, "epochs": 1, "window": 2, "negatives": 2}, "circle_hops": 1},
  "model": {"n_layers": 1, "ffn_dim": 8},
  "train": {"epochs": 1}
}"#;

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Tiny synthetic corpus plus the matching config file.
fn setup(dir: &Path) -> (String, String) {
    let cfg = dir.join("tiny.json");
    std::fs::write(&cfg, TINY).unwrap();
    let corpus = dir.join("corpus");
    ok(&["synth", "--config", s(&cfg), "--out", s(&corpus)]);
    (s(&cfg).to_string(), s(&corpus).to_string())
}

#[test]
fn synth_is_reproducible_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    for (p, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        ok(&[
            "synth",
            "--preset",
            "default",
            "--seed",
            seed,
            "--out",
            s(p),
        ]);
    }
    let read = |p: &Path| std::fs::read(p.join("manifest.json")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(
        std::fs::read(a.join("publications.jsonl")).unwrap(),
        std::fs::read(c.join("publications.jsonl")).unwrap()
    );
    let m: serde_json::Value = serde_json::from_slice(&read(&a)).unwrap();
    assert_eq!(m["seed"], 7);
    assert_eq!(m["command"], "synth");
    assert!(m["config_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn regression_dataset_matches_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, corpus) = setup(dir.path());
    let out = dir.path().join("ds");
    ok(&[
        "dataset",
        "--config",
        &cfg,
        "--corpus",
        &corpus,
        "--mode",
        "regression",
        "--cy",
        "2016",
        "--out",
        s(&out),
    ]);
    let ledger: serde_json::Value =
        serde_json::from_slice(&std::fs::read(Path::new(&corpus).join("ledger.json")).unwrap())
            .unwrap();
    let expected: i64 = ledger["scholars"]
        .as_array()
        .unwrap()
        .iter()
        .filter_map(|s| {
            Some((s["elected_year"].as_i64()? - s["first_year"].as_i64().unwrap() - 7).max(0))
        })
        .sum();
    let count = |name: &str| -> i64 {
        let m: serde_json::Value =
            serde_json::from_slice(&std::fs::read(out.join(name)).unwrap()).unwrap();
        m["examples"].as_i64().unwrap()
    };
    assert!(expected > 0);
    assert_eq!(count("train.json") + count("test.json"), expected);
}

#[test]
fn evaluate_prints_one_row_per_year_and_average() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, corpus) = setup(dir.path());
    let out = dir.path().join("ev");
    let stdout = ok(&[
        "evaluate",
        "--config",
        &cfg,
        "--corpus",
        &corpus,
        "--model",
        "dt-cls",
        "--cy",
        "2016..2018",
        "--out",
        s(&out),
    ]);
    let rows: Vec<&str> = stdout.lines().skip(3).collect();
    assert_eq!(rows.len(), 4, "{stdout}");
    assert!(rows[0].starts_with("2016") && rows[3].starts_with("AVG"));
    let csv = std::fs::read_to_string(out.join("evaluate.csv")).unwrap();
    assert!(csv.starts_with("cy,train,test,f1\n"));
    assert!(!out.join("timing.csv").exists());
}

#[test]
fn train_then_attention() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, corpus) = setup(dir.path());
    let model = dir.path().join("model");
    ok(&[
        "train",
        "--config",
        &cfg,
        "--corpus",
        &corpus,
        "--model",
        "cls-fellow",
        "--cy",
        "2018",
        "--out",
        s(&model),
    ]);
    assert!(model.join("model.cfck").exists());
    let attn = dir.path().join("attn");
    ok(&[
        "analyze",
        "attention",
        "--config",
        &cfg,
        "--corpus",
        &corpus,
        "--model-dir",
        s(&model),
        "--out",
        s(&attn),
    ]);
    let families = std::fs::read_to_string(attn.join("attention_families.csv")).unwrap();
    let total: f64 = families
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 100.0).abs() < 1e-6, "{families}");
}

#[test]
fn usage_errors_exit_2_and_failures_exit_1() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["train", "--model", "svm"]).status.code(), Some(2));
    assert_eq!(
        run(&[
            "ingest",
            "--corpus",
            "/definitely/missing",
            "--out",
            "/tmp/x"
        ])
        .status
        .code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("scholars.jsonl"), "{not json}\n").unwrap();
    std::fs::write(dir.path().join("publications.jsonl"), "").unwrap();
    let out = run(&[
        "ingest",
        "--corpus",
        s(dir.path()),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scholars.jsonl:1"));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, corpus) = setup(dir.path());
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}"));
        let status = Command::new(BIN)
            .env("CAREER_FORGE_THREADS", threads)
            .args([
                "train",
                "--config",
                &cfg,
                "--corpus",
                &corpus,
                "--model",
                "reg-fellow",
                "--cy",
                "2016",
            ])
            .args(["--out", s(&out)])
            .output()
            .unwrap();
        assert!(status.status.success());
        outputs.push(std::fs::read(out.join("manifest.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let bad = Command::new(BIN)
        .env("CAREER_FORGE_THREADS", "zero")
        .args(["ingest"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
