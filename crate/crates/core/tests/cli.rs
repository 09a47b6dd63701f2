use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockhier")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn bound_text_and_exit_code() {
    let o = run(&["bound", "--graph", "paley:13", "--relax", "theta"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("3.605551"), "{text}");
    assert!(text.contains("verified    yes"), "{text}");
}

#[test]
fn bound_json_is_full_precision() {
    let o = run(&["bound", "--graph", "paley:17", "--relax", "l", "--t", "2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["value"].as_f64().unwrap() - 3.2426).abs() < 1e-3);
    assert_eq!(v["status"], "optimal");
    assert_eq!(v["verified"], true);
}

#[test]
fn graph_file_source() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c5.txt");
    std::fs::write(&path, "p 5 5\ne 0 1\ne 1 2\ne 2 3\ne 3 4\ne 4 0\n").unwrap();
    let o = run(&["bound", "--graph", path.to_str().unwrap(), "--relax", "l", "--t", "2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["value"].as_f64().unwrap() - 2.0).abs() < 1e-6);
}

#[test]
fn export_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let k3 = dir.path().join("k3.txt");
    std::fs::write(&k3, "p 3 3\ne 0 1\ne 1 2\ne 0 2\n").unwrap();
    let out = dir.path().join("k3.sdpa");
    let o = run(&["export", "--graph", k3.to_str().unwrap(), "--relax", "theta", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let sdpa = std::fs::read_to_string(&out).unwrap();
    let head: Vec<&str> = sdpa.lines().take(3).collect();
    assert_eq!(head[1].trim(), "1");
    assert_eq!(head[2].trim(), "4");

    let out = dir.path().join("p13.sdpa");
    let o = run(&["export", "--graph", "paley:13", "--relax", "l", "--t", "2", "--out", out.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["stats"]["variables"], 78);
    let sdpa = std::fs::read_to_string(&out).unwrap();
    assert_eq!(sdpa.lines().next().unwrap().trim(), "78");
}

#[test]
fn table_formats_agree() {
    let args = ["table", "--q", "5,13", "--columns", "theta,l2"];
    let text = stdout(&run(&args));
    let csv = stdout(&run(&[&args[..], &["--format", "csv"]].concat()));
    let json: Value = serde_json::from_str(&stdout(&run(&[&args[..], &["--format", "json"]].concat()))).unwrap();

    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    let records: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(records.len(), rows.len());
    for (rec, row) in records.iter().zip(rows) {
        assert_eq!(rec[0].parse::<u64>().unwrap(), row["q"].as_u64().unwrap());
        for (k, cell) in row["cells"].as_array().unwrap().iter().enumerate() {
            let from_csv: f64 = rec[k + 1].parse().unwrap();
            let from_json = cell["value"].as_f64().unwrap();
            assert_eq!(from_csv, from_json);
            let shown = cell["display"].as_str().unwrap();
            assert_eq!(shown, format!("{from_json:.3}"));
            assert!(text.contains(shown), "{shown} missing from\n{text}");
        }
    }
}

#[test]
fn failed_cells_do_not_abort_the_row() {
    let o = run(&["table", "--q", "13", "--columns", "theta,nplus2", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let cells = v["rows"][0]["cells"].as_array().unwrap();
    assert!(cells[0]["value"].as_f64().is_some());
    assert!(cells[1]["value"].is_null());
    assert!(cells[1]["error"].as_str().unwrap().contains("capacity"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["table", "--q", ""][..],
        &["verify", "--scale", "huge"],
        &["bound", "--graph", "paley:15", "--relax", "theta"],
        &["bound", "--graph", "paley:13", "--relax", "lasserre", "--nonneg"],
        &["bound", "--graph", "paley:13", "--relax", "l", "--t", "0"],
        &["bound", "--graph", "no-such-file.txt"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn unwritable_output_is_an_io_error() {
    let o = run(&["export", "--graph", "paley:5", "--relax", "theta", "--out", "/nonexistent-dir/x.sdpa"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("I/O error"));
}

#[test]
fn capacity_exits_three() {
    let o = run(&["bound", "--graph", "paley:61", "--relax", "nplus", "--t", "2"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn verify_small_passes() {
    let o = run(&["verify", "--scale", "small", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.as_array().unwrap().iter().all(|s| s["failed"] == 0));
}

#[test]
fn commands_are_deterministic() {
    let args = ["bound", "--graph", "paley:17", "--relax", "nplus-th", "--format", "json"];
    let strip = |o: Output| {
        let mut v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        v.as_object_mut().unwrap().remove("seconds");
        v
    };
    assert_eq!(strip(run(&args)), strip(run(&args)));
}
