use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn rca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rca")).args(args).output().unwrap()
}

fn fixture(name: &str) -> String {
    format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn analyze_example(out: &Path, extra: &[&str]) -> Output {
    let test = fixture("example_test.jsonl");
    let control = fixture("example_control.jsonl");
    let mut args = vec!["analyze", "--test", &test, "--control", &control, "--out", path(out)];
    args.extend_from_slice(extra);
    rca(&args)
}

/// Writes a JSONL group, one trace per entry.
fn write_group(path: &Path, prefix: &str, traces: &[Vec<&str>]) {
    let mut s = String::new();
    for (i, t) in traces.iter().enumerate() {
        writeln!(s, "{}", serde_json::json!({"id": format!("{prefix}{i}"), "events": t})).unwrap();
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn example_report_has_two_rows_at_similarity_point_six() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = analyze_example(&out, &["--min-support", "2", "--similarity", "0.6"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["schema"], "rca-report/1");
    let rows = report["patterns"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["pattern"], serde_json::json!(["e2", "e3"]));
    assert_eq!(rows[0]["test_support"], 3);
    assert_eq!(rows[0]["control_support"], 0);
    assert_eq!(rows[1]["pattern"], serde_json::json!(["e5", "e7"]));
    assert_eq!(rows[1]["test_support"], 2);
    assert_eq!(report["resolved"]["min_support_test"], 2);

    let table = stdout(&o);
    assert!(table.starts_with("pattern"));
    assert!(table.contains("(e2, e3)"));
    assert!(table.contains("(e5, e7)"));
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn top_five_in_table_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("table.txt");
    let o = analyze_example(&out, &["--min-support", "2", "--similarity", "1.0", "--format", "table"]);
    assert!(o.status.success());
    let table = std::fs::read_to_string(&out).unwrap();
    let first: Vec<&str> = table.lines().nth(1).unwrap().split_whitespace().collect();
    assert_eq!(first, ["(e2,", "e3)", "3", "0", "1.00", "0.60", "0.75"]);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert!(analyze_example(&a, &["--min-support", "1"]).status.success());
    assert!(analyze_example(&b, &["--min-support", "1"]).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn fractional_support_is_resolved_and_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let test = dir.path().join("t.jsonl");
    let control = dir.path().join("c.jsonl");
    let traces: Vec<Vec<&str>> = (0..100).map(|i| if i % 3 == 0 { vec!["a", "b"] } else { vec!["b"] }).collect();
    write_group(&test, "t", &traces);
    write_group(&control, "c", &[vec!["b"], vec!["c"]]);
    let out = dir.path().join("r.json");
    let o = rca(&["analyze", "--test", path(&test), "--control", path(&control), "--min-support", "0.05", "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["resolved"]["min_support_test"], 5);
    assert_eq!(report["config"]["min_support"]["fraction"], 0.05);
}

#[test]
fn missing_control_exits_one_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let test = fixture("example_test.jsonl");
    let o = rca(&["analyze", "--test", &test, "--control", "/nonexistent/c.jsonl", "--min-support", "2", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot open"));
    assert!(stdout(&o).is_empty());
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn invalid_parameters_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    for extra in [
        vec!["--min-support", "2.5"],
        vec!["--min-support", "0"],
        vec!["--min-support", "2", "--similarity", "1.5"],
        vec!["--min-support", "2", "--max-len", "0"],
    ] {
        let o = analyze_example(&out, &extra);
        assert_eq!(o.status.code(), Some(1), "{extra:?}");
        assert!(!out.exists());
    }
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"id\":\"t0\",\"events\":[\"a\"]}\nnot json\n").unwrap();
    let o = rca(&["analyze", "--test", path(&bad), "--control", path(&bad), "--min-support", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"));
}

#[test]
fn empty_test_group_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let test = dir.path().join("t.jsonl");
    std::fs::write(&test, "{\"id\":\"t0\",\"events\":[]}\n").unwrap();
    let out = dir.path().join("r.json");
    let control = fixture("example_control.jsonl");
    let o = rca(&["analyze", "--test", path(&test), "--control", &control, "--min-support", "1", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn mine_lists_supported_patterns() {
    let test = fixture("example_test.jsonl");
    let o = rca(&["mine", "--input", &test, "--min-support", "2", "--max-len", "3"]);
    assert!(o.status.success());
    let rows: Vec<Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let find = |p: Value| rows.iter().find(|r| r["pattern"] == p).cloned();
    assert_eq!(find(serde_json::json!(["e2", "e3"])).unwrap()["trace_ids"], serde_json::json!(["t1", "t2", "t3"]));
    assert_eq!(find(serde_json::json!(["e5", "e7"])).unwrap()["support"], 2);
    assert!(find(serde_json::json!(["e6"])).is_none());
}

fn analyze_groups(dir: &Path, name: &str, test: &[Vec<&str>], control: &[Vec<&str>]) -> PathBuf {
    let t = dir.join(format!("{name}_test.jsonl"));
    let c = dir.join(format!("{name}_control.jsonl"));
    write_group(&t, "t", test);
    write_group(&c, "c", control);
    let out = dir.join(format!("{name}.json"));
    let o = rca(&["analyze", "--test", path(&t), "--control", path(&c), "--min-support", "2", "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

fn link(reports: &[&PathBuf], threshold: &str) -> Value {
    let mut args = vec!["link", "--threshold", threshold];
    args.extend(reports.iter().map(|p| path(p)));
    let o = rca(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    serde_json::from_str(&stdout(&o)).unwrap()
}

fn members(v: &Value) -> Vec<Vec<String>> {
    v["clusters"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| serde_json::from_value(c["members"].clone()).unwrap())
        .collect()
}

#[test]
fn identical_reports_link_and_disjoint_reports_do_not() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    assert!(analyze_example(&a, &["--min-support", "2"]).status.success());
    let b = dir.path().join("b.json");
    std::fs::copy(&a, &b).unwrap();
    let v = link(&[&a, &b], "0.1");
    assert_eq!(members(&v), vec![vec![path(&a).to_string(), path(&b).to_string()]]);

    let x = analyze_groups(dir.path(), "x", &[vec!["p", "q"], vec!["p", "q"]], &[vec!["z"]]);
    let y = analyze_groups(dir.path(), "y", &[vec!["r", "s"], vec!["r", "s"]], &[vec!["z"]]);
    let v = link(&[&x, &y], "0.1");
    assert_eq!(members(&v).len(), 2);
}

/// Parses `ranked` rows of a report into a dense (precision, recall, f1) map.
fn stats(report: &Path) -> std::collections::BTreeMap<Vec<String>, [f64; 3]> {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    v["ranked"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            let p: Vec<String> = serde_json::from_value(r["pattern"].clone()).unwrap();
            (p, [r["precision"].as_f64().unwrap(), r["recall"].as_f64().unwrap(), r["f1"].as_f64().unwrap()])
        })
        .collect()
}

fn distance(a: &Path, b: &Path) -> f64 {
    let (sa, sb) = (stats(a), stats(b));
    let dot: f64 = sa
        .iter()
        .filter_map(|(k, x)| sb.get(k).map(|y| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>()))
        .sum();
    let norm = |s: &std::collections::BTreeMap<Vec<String>, [f64; 3]>| {
        s.values().flat_map(|x| x.iter()).map(|u| u * u).sum::<f64>().sqrt()
    };
    1.0 - dot / (norm(&sa) * norm(&sb))
}

#[test]
fn five_reports_with_a_shared_dominant_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let control: Vec<Vec<&str>> = vec![vec!["w"]; 10];
    let shared = |extra: &'static str| {
        let mut t: Vec<Vec<&str>> = vec![vec!["x", "y", "z"]; 10];
        t.extend(vec![vec![extra]; 3]);
        t
    };
    let r1 = analyze_groups(dir.path(), "r1", &shared("a1"), &control);
    let r2 = analyze_groups(dir.path(), "r2", &shared("a2"), &control);
    let r3 = analyze_groups(dir.path(), "r3", &shared("a3"), &control);
    let r4 = analyze_groups(dir.path(), "r4", &vec![vec!["u", "v"]; 8], &control);
    let r5 = analyze_groups(dir.path(), "r5", &vec![vec!["s", "t", "s"]; 6], &control);
    let all = [&r1, &r2, &r3, &r4, &r5];

    // distances straddle the threshold: shared-pattern pairs below, the rest above
    for (i, a) in all.iter().enumerate() {
        for (j, b) in all.iter().enumerate().skip(i + 1) {
            let d = distance(a, b);
            if i < 3 && j < 3 {
                assert!(d > 0.0 && d <= 0.1, "{i}-{j}: {d}");
            } else {
                assert!(d > 0.1, "{i}-{j}: {d}");
            }
        }
    }

    let v = link(&all, "0.1");
    let mut trio = vec![path(&r1).to_string(), path(&r2).to_string(), path(&r3).to_string()];
    trio.sort();
    let got = members(&v);
    assert_eq!(got.len(), 3);
    assert!(got.contains(&trio));
    assert!(got.contains(&vec![path(&r4).to_string()]));
    assert!(got.contains(&vec![path(&r5).to_string()]));
}

#[test]
fn incompatible_report_schema_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    assert!(analyze_example(&a, &["--min-support", "2"]).status.success());
    let old = dir.path().join("old.json");
    let text = std::fs::read_to_string(&a).unwrap().replace("rca-report/1", "rca-report/0");
    std::fs::write(&old, text).unwrap();
    let o = rca(&["link", path(&a), path(&old)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("rca-report/0"));
}

#[test]
fn bench_emits_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let o = rca(&["bench", "--preset", "easy", "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("sweep,traces_per_group"));
    assert!(lines[1].starts_with("none,3000,20,200,0.05,5,"));
    assert!(lines[1].ends_with(",ok"));

    let o = rca(&["bench", "--traces", "200", "--median-len", "8", "--sweep", "traces", "--steps", "3"]);
    assert!(o.status.success());
    let rows: Vec<Vec<String>> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    let traces: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(traces, ["200", "400", "800"]);
}

#[test]
fn bench_records_timeouts_and_skips_larger_steps() {
    let o = rca(&["bench", "--traces", "200", "--median-len", "8", "--sweep", "length", "--steps", "3", "--timeout", "0"]);
    assert!(o.status.success());
    let statuses: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().to_string())
        .collect();
    assert_eq!(statuses, ["timeout", "skipped", "skipped"]);
}
