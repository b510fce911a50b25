use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn xlign(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xlign"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(o: Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        o.status.code(),
        stdout(&o),
        String::from_utf8_lossy(&o.stderr)
    );
    stdout(&o)
}

fn synth(dir: &Path) {
    ok(xlign(
        dir,
        &[
            "synth",
            "--preset",
            "non-isomorphic",
            "--n",
            "600",
            "--d",
            "12",
            "--noise",
            "0.01",
            "--train",
            "200",
            "--test",
            "150",
            "--seed",
            "3",
            "--out-dir",
            "w",
        ],
    ));
}

#[test]
fn normalize_align_evaluate_translate() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    for side in ["src", "tgt"] {
        let out = ok(xlign(
            dir,
            &[
                "normalize",
                "--method",
                "iternorm",
                &format!("w/{side}.vec"),
                &format!("{side}.in.vec"),
                "--report",
                &format!("{side}.json"),
            ],
        ));
        assert!(out.starts_with("IN: 600 words"), "{out}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("src.json")).unwrap()).unwrap();
    assert_eq!(report["iterations"].as_array().unwrap().len(), 5);

    ok(xlign(
        dir,
        &[
            "align",
            "--method",
            "procrustes",
            "--train-dict",
            "w/train.txt",
            "--src",
            "src.in.vec",
            "--tgt",
            "tgt.in.vec",
            "--out",
            "W.map",
        ],
    ));
    assert!(fs::read_to_string(dir.join("W.map")).unwrap().starts_with("12 1\n"));

    let json = ok(xlign(
        dir,
        &[
            "evaluate",
            "--map",
            "W.map",
            "--src",
            "src.in.vec",
            "--tgt",
            "tgt.in.vec",
            "--test-dict",
            "w/test.txt",
        ],
    ));
    let ev: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(ev["total_queries"], 150);
    assert!(ev["accuracy"].as_f64().unwrap() > 0.5, "{}", ev["accuracy"]);

    let out = ok(xlign(
        dir,
        &[
            "translate",
            "--map",
            "W.map",
            "--src",
            "src.in.vec",
            "--tgt",
            "tgt.in.vec",
            "--topk",
            "2",
            "s0",
            "s1",
        ],
    ));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("s0\tt"));
    assert_eq!(lines[1].split('\t').count(), 3);
}

#[test]
fn grid_then_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    let table = ok(xlign(
        dir,
        &[
            "grid",
            "--src",
            "w/src.vec",
            "--tgt",
            "w/tgt.vec",
            "--train-dict",
            "w/train.txt",
            "--test-dict",
            "w/test.txt",
            "--out-dir",
            "grid",
            "--tag",
            "syn",
            "--methods",
            "procrustes,procrustes-refine",
        ],
    ));
    assert_eq!(table.lines().count(), 7, "{table}");
    assert!(dir.join("grid/procrustes-iternorm/run.json").exists());
    assert!(dir.join("grid/table.csv").exists());

    let csv = ok(xlign(dir, &["report", "grid", "--format", "csv"]));
    assert_eq!(csv, fs::read_to_string(dir.join("grid/table.csv")).unwrap());
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "method,normalization,syn");
    assert!(rows[1].starts_with("Procrustes,None,"));
    assert!(rows[3].starts_with("Procrustes,IN,"));
}

#[test]
fn simsuite_and_neighbors() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("s.vec"),
        "4 2\nking 1 0.1\nqueen 0.9 0.3\napple 0 1\npear 0.1 0.95\n",
    )
    .unwrap();
    fs::write(
        dir.join("sim.txt"),
        "king queen 9\napple pear 9.5\nking apple 1\nqueen pear 2\nfoo bar 5\n",
    )
    .unwrap();
    let out = ok(xlign(dir, &["simsuite", "--space", "s.vec", "--dataset", "sim.txt"]));
    assert!(out.contains("\t100.0\t4 pairs (1 skipped)"), "{out}");

    let out = ok(xlign(
        dir,
        &["neighbors", "--space", "s.vec", "--word", "king", "--k", "2"],
    ));
    assert!(out.starts_with("queen\t"), "{out}");
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth(dir);
    fs::write(dir.join("run.toml"), "[normalize]\nmethod = \"cl\"\n").unwrap();
    let out = ok(xlign(dir, &["--config", "run.toml", "normalize", "w/src.vec", "a.vec"]));
    assert!(out.starts_with("C+L:"), "{out}");
    let out = ok(xlign(
        dir,
        &[
            "--config",
            "run.toml",
            "normalize",
            "--method",
            "none",
            "w/src.vec",
            "b.vec",
        ],
    ));
    assert!(out.starts_with("None:"), "{out}");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(xlign(dir, &["align", "--bogus"]).status.code(), Some(1));
    assert_eq!(xlign(dir, &["--help"]).status.code(), Some(0));

    let missing = xlign(dir, &["normalize", "nope.vec", "out.vec"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.vec"));

    fs::write(dir.join("bad.vec"), "2 3\na 1 0\nb 0 1 0\n").unwrap();
    let bad = xlign(dir, &["normalize", "bad.vec", "out.vec"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2"));

    // Identical vectors collapse to zero after centering.
    fs::write(dir.join("same.vec"), "2 2\na 1 1\nb 1 1\n").unwrap();
    let zero = xlign(dir, &["normalize", "--method", "iternorm", "same.vec", "out.vec"]);
    assert_eq!(zero.status.code(), Some(3), "{}", String::from_utf8_lossy(&zero.stderr));
    assert!(!dir.join("out.vec").exists());
}

#[test]
fn fetch_instructions_only_prints() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(xlign(
        tmp.path(),
        &["fetch-instructions", "--data-dir", "/data", "--langs", "ja"],
    ));
    assert!(out.contains("https://dl.fbaipublicfiles.com/fasttext/vectors-wiki/wiki.ja.vec"));
    assert!(out.contains("/data/dictionaries/en-ja.0-5000.txt"));
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}
