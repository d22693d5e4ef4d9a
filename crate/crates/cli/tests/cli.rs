use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ipstop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipstop")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_then_solve_from_directory() {
    let dir = tempfile::tempdir().unwrap();
    let prob = dir.path().join("prob");
    let o = ipstop(&["gen", "--family", "random", "--m", "8", "--n", "20", "--seed", "3", "--out", path(&prob)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(prob.join("meta.txt").exists());

    let out = dir.path().join("sol");
    let o = ipstop(&["solve", "--dir", path(&prob), "--policy", "fixtol", "--tol", "1e-10", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("converged"));
    for f in ["stats.csv", "solves.csv", "x.bin"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(fs::metadata(out.join("x.bin")).unwrap().len(), 20 * 8);
}

#[test]
fn bench_writes_both_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = ipstop(&["bench", "--family", "tomo", "--level", "8", "--seeds", "0..2", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    let runs = fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 7);
    assert!(stdout(&o).contains("ipstop"));
}

#[test]
fn trace_writes_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = ipstop(&["trace", "--family", "tomo", "--level", "8", "--ipm-iter", "3", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.lines().count() > 1);
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = ipstop(&["solve", "--dir", path(&dir.path().join("missing"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = ipstop(&["solve", "--family", "tomo", "--level", "8", "--policy", "ipstop", "--eps", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}
