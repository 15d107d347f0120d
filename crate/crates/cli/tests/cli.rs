//! End-to-end tests of the `normforge` binary: golden outputs, exit codes,
//! JSON schemas and input handling.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_normforge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn repo_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(repo_path(&format!("tests/golden/{name}"))).unwrap()
}

fn schema(name: &str) -> jsonschema::Validator {
    let text = std::fs::read_to_string(repo_path(&format!("../../docs/schemas/{name}.schema.json")))
        .unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid(schema_name: &str, args: &[&str]) -> Value {
    let o = run(args);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    let v = schema(schema_name);
    let errors: Vec<String> = v.iter_errors(&doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:?}");
    doc
}

#[test]
fn golden_rate() {
    let o = run(&["rate", "--x", "2,1", "--t-grid", "0.2,0.5", "--n", "10,100"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("rate_2_1.csv"));
}

#[test]
fn golden_sandwich() {
    let o = run(&[
        "sandwich", "--x", "3,2,1", "--p", "1", "--epsilon", "0.05", "--n", "1,10,50",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("sandwich_3_2_1.csv"));
}

#[test]
fn golden_characterize() {
    let o = run(&["characterize", "--norm", "lp:2", "--samples", "100", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("characterize_lp2.json"));
    let o = run(&["characterize", "--norm", "kyfan:3", "--samples", "100"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stdout(&o), golden("characterize_kyfan3.csv"));
}

#[test]
fn golden_schatten_check() {
    let o = run(&["schatten-check", "--sizes", "3x2,2", "--trials", "3", "--p", "1,2,inf"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("schatten_3x2_2.csv"));
}

#[test]
fn golden_rv_check() {
    let o = run(&["rv-check", "--n-max", "3", "--p", "2,inf"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("rv_check_3.csv"));
}

#[test]
fn json_outputs_match_schemas() {
    assert_valid(
        "rate",
        &["rate", "--x", "2,1", "--t-grid", "0:1:5", "--n", "3", "--format", "json"],
    );
    assert_valid(
        "sandwich",
        &["sandwich", "--x", "2,1", "--p", "2", "--n", "1,5", "--format", "json"],
    );
    for norm in ["lp:2", "lp:inf", "kyfan:2", "schatten-diag:3"] {
        assert_valid(
            "characterize",
            &["characterize", "--norm", norm, "--samples", "50", "--format", "json"],
        );
    }
    assert_valid(
        "schatten-check",
        &["schatten-check", "--trials", "2", "--format", "json"],
    );
    assert_valid("rv-check", &["rv-check", "--n-max", "4", "--format", "json"]);
}

#[test]
fn schema_rejects_malformed_rows() {
    let v = schema("rate");
    let bad = serde_json::json!([{ "n": 0, "t": "x" }]);
    assert!(!v.is_valid(&bad));
}

#[test]
fn characterize_exit_codes() {
    for (norm, code) in [
        ("lp:2", 0),
        ("lp:inf", 0),
        ("schatten-diag:2", 0),
        ("kyfan:2", 3),
        ("foo:1", 2),
        ("lp:0.5", 2),
        ("kyfan:0", 2),
        ("lp", 2),
    ] {
        let o = run(&["characterize", "--norm", norm, "--samples", "50"]);
        assert_eq!(o.status.code(), Some(code), "{norm}");
    }
}

#[test]
fn characterize_reports_p_and_witness() {
    let doc = assert_valid(
        "characterize",
        &["characterize", "--norm", "lp:inf", "--samples", "50", "--format", "json"],
    );
    assert_eq!(doc["p_estimate"], "inf");
    let doc = assert_valid(
        "characterize",
        &["characterize", "--norm", "kyfan:2", "--samples", "50", "--format", "json"],
    );
    assert!(doc["verdict"].as_str().unwrap().starts_with("violates_"));
    assert!(doc["witness"].is_array());
}

#[test]
fn usage_errors_exit_2_and_name_the_flag() {
    let cases: [(&[&str], &str); 8] = [
        (&["rv-check", "--n-max", "51"], "--n-max"),
        (&["schatten-check", "--sizes", "7"], "--sizes"),
        (&["schatten-check", "--sizes", "3x0"], "--sizes"),
        (&["sandwich", "--x", "2,1", "--p", "inf"], "--p"),
        (&["sandwich", "--x", "2,1", "--p", "2", "--epsilon", "0"], "--epsilon"),
        (&["rate", "--x", "0,0", "--t-grid", "0"], "--x"),
        (&["rate", "--x", "2,a", "--t-grid", "0"], "--x"),
        (&["rate", "--x", "2,1", "--t-grid", "0", "--n", "0"], "--n"),
    ];
    for (args, flag) in cases {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(flag), "{args:?}: {err}");
        assert!(o.stdout.is_empty());
    }
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["rate", "--bogus"]).status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let args = ["schatten-check", "--trials", "5", "--seed", "7", "--format", "json"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let a = run(&["schatten-check", "--trials", "5", "--seed", "7"]).stdout;
    let b = run(&["schatten-check", "--trials", "5", "--seed", "8"]).stdout;
    assert_ne!(a, b);
}

#[test]
fn inline_sequence_wins_over_input_file() {
    let dir = std::env::temp_dir().join(format!("normforge-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let input = dir.join("x.json");
    std::fs::write(&input, "[3, 1]").unwrap();
    let input = input.to_str().unwrap();

    let from_file = run(&["rate", "--input", input, "--t-grid", "0.5", "--n", "5"]);
    let inline = run(&["rate", "--x", "3,1", "--t-grid", "0.5", "--n", "5"]);
    assert_eq!(from_file.stdout, inline.stdout);
    assert!(from_file.stderr.is_empty());

    let both = run(&["rate", "--x", "2,1", "--input", input, "--t-grid", "0.5", "--n", "5"]);
    let plain = run(&["rate", "--x", "2,1", "--t-grid", "0.5", "--n", "5"]);
    assert_eq!(both.stdout, plain.stdout);
    assert!(String::from_utf8_lossy(&both.stderr).contains("warning"));

    let out = dir.join("out.csv");
    let o = run(&[
        "rate", "--x", "2,1", "--t-grid", "0.5", "--n", "5", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&out).unwrap(), plain.stdout);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn every_csv_has_a_header() {
    let cases: [&[&str]; 5] = [
        &["rate", "--x", "2,1", "--t-grid", "0.5", "--n", "5"],
        &["sandwich", "--x", "2,1", "--p", "2", "--n", "5"],
        &["characterize", "--norm", "lp:1", "--samples", "20"],
        &["schatten-check", "--trials", "1"],
        &["rv-check", "--n-max", "2"],
    ];
    for args in cases {
        let out = stdout(&run(args));
        let header = out.lines().next().unwrap();
        assert!(header.split(',').all(|c| c.chars().all(|ch| ch.is_ascii_lowercase() || ch == '_')), "{header}");
    }
}

#[test]
fn rate_examples() {
    let out = stdout(&run(&["rate", "--x", "1,1", "--t-grid", "0", "--n", "10"]));
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[4], "ln_k");
    let rate: f64 = row[2].parse().unwrap();
    assert!((rate - 2f64.ln()).abs() < 1e-15);

    let out = stdout(&run(&["rate", "--x", "2,1", "--t-grid", "0.5", "--n", "100"]));
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert!(row[5].parse::<f64>().unwrap() < 0.05);

    let out = stdout(&run(&["rate", "--x", "2,1", "--t-grid", "0.2", "--n", "50"]));
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[4], "ln_k");
}

#[test]
fn sandwich_examples() {
    let out = stdout(&run(&["sandwich", "--x", "2,1", "--p", "2", "--n", "500"]));
    let row: Vec<f64> = out.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!(row[5] <= 1.12);

    let out = stdout(&run(&["sandwich", "--x", "1,1", "--p", "3", "--n", "1"]));
    let row: Vec<f64> = out.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    let want = 2f64.powf(1.0 / 3.0);
    assert!((row[2] - want).abs() < 1e-15 && (row[3] - want).abs() < 1e-15);

    let o = run(&["sandwich", "--x", "3,2,1", "--p", "1", "--n", "1,20,50,100,200"]);
    assert_eq!(o.status.code(), Some(0));
    let ratios: Vec<f64> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
}

#[test]
fn schatten_check_kinds() {
    let o = run(&["schatten-check", "--sizes", "4", "--p", "2", "--trials", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["schatten-check", "--kind", "identity", "--sizes", "4", "--trials", "3"]);
    for line in stdout(&o).lines().skip(1) {
        assert!(line.ends_with(",0.0,0.0,0.0"), "{line}");
    }
    let o = run(&["schatten-check", "--kind", "diagonal", "--p", "inf", "--trials", "5"]);
    for line in stdout(&o).lines().skip(1) {
        assert!(line.ends_with(",0.0,0.0,0.0"), "{line}");
    }
}

#[test]
fn rv_check_examples() {
    let o = run(&["rv-check", "--n-max", "10", "--p", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.lines().skip(1).all(|l| l.contains(",true,")));
    assert!(out.contains("\n4,6,2.0,true,"));
    assert!(out.contains("\n1,1,2.0,true,1.0,1.0,0.0\n"));
}
