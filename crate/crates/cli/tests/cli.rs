//! End-to-end checks of the `rksl` binary: flag surface, exit codes, and
//! that subcommands stay thin adapters over the library.

use std::path::PathBuf;
use std::process::{Command, Output};

fn rksl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rksl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn temp_path(name: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("rksl-test-{}-{name}", std::process::id()));
    path
}

#[test]
fn analyze_backward_euler() {
    let out = rksl(&["analyze", "--catalog", "backward-euler"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("p_SL = 1"), "{text}");
    assert!(text.contains("q = 1"), "{text}");
    assert!(text.contains("A-stability:   holds"), "{text}");
    assert!(text.contains("AS-stability:  holds"), "{text}");
    assert!(text.contains("ASI-stability: holds"), "{text}");
}

#[test]
fn analyze_implicit_midpoint_superconvergence() {
    let out = rksl(&["analyze", "--catalog", "implicit-midpoint"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("p_SL = 1"), "{text}");
    assert!(text.contains("q = 2"), "{text}");
    assert!(text.contains("superconvergence"), "{text}");
}

#[test]
fn analyze_missing_file_is_usage_error() {
    let out = rksl(&["analyze", "--file", "missing.tab"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("missing.tab"));
}

#[test]
fn analyze_requirements_gate_exit_code() {
    let ok = rksl(&["analyze", "--catalog", "trapezoid", "--require", "p-sl>=2,a-stable"]);
    assert!(ok.status.success(), "{}", stderr(&ok));
    let bad = rksl(&["analyze", "--catalog", "backward-euler", "--require", "p-sl>=2"]);
    assert_eq!(bad.status.code(), Some(1));
    let nonsense = rksl(&["analyze", "--catalog", "backward-euler", "--require", "shiny"]);
    assert_eq!(nonsense.status.code(), Some(2));
}

#[test]
fn analyze_file_round_trip() {
    let path = temp_path("trapezoid.tab");
    std::fs::write(
        &path,
        r#"{"name": "file-trapezoid", "A": [["0","0"],["1/2","1/2"]], "b": ["1/2","1/2"]}"#,
    )
    .unwrap();
    let out = rksl(&["analyze", "--file", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("p_SL = 2"));
    std::fs::remove_file(&path).ok();
}

#[test]
fn trees_listing_counts() {
    let out = rksl(&["trees", "--max-order", "5"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("17 trees"), "{}", stdout(&out));

    let slca = rksl(&["trees", "--max-order", "5", "--slca-only"]);
    assert!(stdout(&slca).contains("9 trees"), "{}", stdout(&slca));

    let single = rksl(&["trees", "--max-order", "1"]);
    let text = stdout(&single);
    assert!(text.contains("1 trees"), "{text}");
    assert!(text.lines().any(|l| l.starts_with("[]") && l.contains('1')), "{text}");

    let out_of_range = rksl(&["trees", "--max-order", "12"]);
    assert_eq!(out_of_range.status.code(), Some(2));
}

#[test]
fn stability_report_for_gauss2() {
    let out = rksl(&["stability", "--catalog", "gauss-2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("A-stability:   holds"), "{text}");
    assert!(text.contains("R-condition:   fails"), "{text}");
    assert!(text.contains("numerator coefficients"), "{text}");
}

#[test]
fn lte_verify_trapezoid() {
    let out = rksl(&[
        "lte-verify",
        "--catalog",
        "trapezoid",
        "--problem",
        "npr-scalar",
        "--lambda",
        "-1000",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("series routes agree"), "{}", stdout(&out));
}

#[test]
fn integrate_writes_trajectory() {
    let path = temp_path("traj.csv");
    let out = rksl(&[
        "integrate",
        "--catalog",
        "trapezoid",
        "--problem",
        "npr-scalar",
        "--lambda",
        "-1000",
        "--h",
        "0.01",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("t,y1,newton"), "{text}");
    assert_eq!(text.lines().count(), 102);
    // spec example: final error well below 1e-4 at these settings
    let final_error: f64 = stdout(&out)
        .lines()
        .find(|l| l.contains("final-time error"))
        .and_then(|l| l.split_whitespace().nth(5))
        .and_then(|v| v.parse().ok())
        .expect("error line present");
    assert!(final_error <= 1e-4, "final error {final_error}");
    std::fs::remove_file(&path).ok();
}

#[test]
fn integrate_partial_step_fails() {
    let out = rksl(&[
        "integrate",
        "--catalog",
        "backward-euler",
        "--h",
        "0.3",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("not an integer step count"));
}

#[test]
fn converge_gates_on_required_order() {
    let ok = rksl(&[
        "converge",
        "--catalog",
        "trapezoid",
        "--problem",
        "npr-scalar",
        "--lambdas",
        "-1e2,-1e6",
        "--h-grid",
        "2^-3..2^-8",
        "--require-order",
        "2",
    ]);
    assert!(ok.status.success(), "{}", stderr(&ok));

    let bad = rksl(&[
        "converge",
        "--catalog",
        "backward-euler",
        "--problem",
        "npr-scalar",
        "--lambdas",
        "-1e2",
        "--h-grid",
        "2^-3..2^-8",
        "--require-order",
        "2",
    ]);
    assert_eq!(bad.status.code(), Some(1));

    let empty = rksl(&["converge", "--catalog", "trapezoid", "--h-grid", ""]);
    assert_eq!(empty.status.code(), Some(2));
}

#[test]
fn converge_csv_round_trips_through_the_reader() {
    let prefix = temp_path("study");
    let out = rksl(&[
        "converge",
        "--catalog",
        "backward-euler",
        "--problem",
        "npr-scalar",
        "--lambdas",
        "-1e2,-1e4",
        "--h-grid",
        "2^-3..2^-6",
        "--output",
        prefix.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(prefix.with_extension("csv")).unwrap();
    assert!(csv.starts_with("lambda,h,error,newton_total"));
    let cells = rk_semilinear::harness::read_study_csv(&csv).unwrap();
    assert_eq!(cells.len(), 8);
    assert!(cells.iter().all(|c| c.error.is_some()));
    let summary = std::fs::read_to_string(prefix.with_extension("summary.txt")).unwrap();
    assert!(summary.contains("predicted order q = 1"), "{summary}");
    std::fs::remove_file(prefix.with_extension("csv")).ok();
    std::fs::remove_file(prefix.with_extension("summary.txt")).ok();
}

#[test]
fn converge_csv_format_to_stdout() {
    let out = rksl(&[
        "converge",
        "--catalog",
        "backward-euler",
        "--problem",
        "npr-scalar",
        "--lambdas",
        "-10",
        "--h-grid",
        "0.125,0.0625,0.03125",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("lambda,h,error,newton_total"), "{text}");
    assert_eq!(text.lines().count(), 4);
}
