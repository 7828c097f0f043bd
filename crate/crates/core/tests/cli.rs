use std::fs;
use std::path::{Path, PathBuf};

use hybridq::cli::{run, EXIT_FATAL, EXIT_ITEM_FAILURES, EXIT_OK};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn hq(args: &[&str]) -> i32 {
    run(std::iter::once("hybridq").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(hq(&["no-such-command"]), EXIT_FATAL);
    assert_eq!(hq(&["eval", "--gold", "x.json"]), EXIT_FATAL);
    let data = fixtures().join("desk/museum_visit");
    assert_eq!(
        hq(&["serve", "--data", p(&data), "--fraction", "2", "--port", "0"]),
        EXIT_FATAL
    );
}

#[test]
fn eval_reports_matches_through_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.json");
    let same = dir.path().join("same.json");
    let other = dir.path().join("other.json");
    fs::write(&gold, r#"{"columns": ["name", "n"], "rows": [["a", 1], ["b", 2.0]]}"#).unwrap();
    fs::write(
        &same,
        r#"{"columns": ["n", "name", "extra"], "rows": [[2, "b", null], [1, "a", 0]]}"#,
    )
    .unwrap();
    fs::write(&other, r#"{"columns": ["name", "n"], "rows": [["a", 1], ["b", 3]]}"#).unwrap();
    assert_eq!(hq(&["eval", "--gold", p(&gold), "--pred", p(&gold)]), EXIT_OK);
    assert_eq!(hq(&["eval", "--gold", p(&gold), "--pred", p(&same)]), EXIT_OK);
    assert_eq!(
        hq(&["eval", "--gold", p(&gold), "--pred", p(&same), "--ordered"]),
        EXIT_ITEM_FAILURES
    );
    assert_eq!(
        hq(&["eval", "--gold", p(&gold), "--pred", p(&other)]),
        EXIT_ITEM_FAILURES
    );
    assert_eq!(
        hq(&[
            "eval",
            "--gold",
            p(&gold),
            "--pred",
            p(&dir.path().join("missing.json"))
        ]),
        EXIT_FATAL
    );
}

#[test]
fn schema_compile_then_rewrite() {
    let dir = tempfile::tempdir().unwrap();
    let view = dir.path().join("view.json");
    let ddl_out = dir.path().join("view.sql");
    let ddl = fixtures().join("desk/poker_player/schema.sql");
    let code = hq(&[
        "schema",
        "compile",
        "--ddl",
        p(&ddl),
        "--scalar-apis",
        "http://127.0.0.1:9",
        "--out",
        p(&view),
        "--ddl-out",
        p(&ddl_out),
    ]);
    assert_eq!(code, EXIT_OK);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&view).unwrap()).unwrap();
    assert!(json.to_string().contains("count_syllables"));
    assert!(fs::read_to_string(&ddl_out).unwrap().contains("CREATE TABLE"));

    let qr: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fixtures().join("bench2_qr.json")).unwrap()).unwrap();
    let sql = qr["poker_player.172"].as_str().unwrap();
    assert_eq!(hq(&["rewrite", "--sql", sql, "--view", p(&view)]), EXIT_OK);
    assert_eq!(
        hq(&["rewrite", "--sql", "SELECT * FROM nowhere", "--view", p(&view)]),
        EXIT_FATAL
    );
}

#[test]
fn sweep_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let code = hq(&[
            "sweep",
            "--dataset",
            p(&fixtures().join("bench1.jsonl")),
            "--data-root",
            p(&fixtures().join("desk")),
            "--fractions",
            "0,0.5,1",
            "--seed",
            "7",
            "--csv",
            p(out),
        ]);
        assert_eq!(code, EXIT_OK);
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().count(), 4, "{text}");
}

#[test]
fn bench_exits_one_when_a_question_mismatches() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = dir.path().join("bench.jsonl");
    let original = fs::read_to_string(fixtures().join("bench1.jsonl")).unwrap();
    let lines: Vec<&str> = original.lines().take(3).collect();
    fs::write(&dataset, lines.join("\n") + "\n").unwrap();
    let report = dir.path().join("report.json");
    let args = |ds: &Path| {
        vec![
            "bench".to_string(),
            "--dataset".into(),
            p(ds).into(),
            "--data-root".into(),
            p(&fixtures().join("desk")).into(),
            "--report".into(),
            p(&report).into(),
        ]
    };
    assert_eq!(
        run(std::iter::once("hybridq".to_string()).chain(args(&dataset))),
        EXIT_OK
    );

    let mut first: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    first["gold_rows"] = serde_json::json!([[-1]]);
    let corrupted = dir.path().join("corrupted.jsonl");
    fs::write(&corrupted, format!("{first}\n{}\n{}\n", lines[1], lines[2])).unwrap();
    assert_eq!(
        run(std::iter::once("hybridq".to_string()).chain(args(&corrupted))),
        EXIT_ITEM_FAILURES
    );
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["summary"]["matched"], 2);
    assert_eq!(r["summary"]["n"], 3);
}
