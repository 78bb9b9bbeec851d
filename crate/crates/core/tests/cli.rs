use std::path::PathBuf;
use std::process::{Command, Output};

use hsimplex::learning_graph::stage::{random_symmetric_stage, weight_symmetric_stage};
use hsimplex::seeds::stream_rng;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsimplex")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn temp_file(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hsimplex-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn lp_solve_prints_the_optimum() {
    let o = run(&["lp-solve"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "objective=2.454765"), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("stage:")).count(), 30);
    assert_eq!(text.lines().filter(|l| !l.starts_with("stage:") && l.contains('=')).count(), 32);
}

#[test]
fn empty_graph_has_no_simplex() {
    let path = temp_file("empty.txt", "5 2\n");
    let o = run(&["simplex-find", "--in", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("no simplex\n"));
}

#[test]
fn malformed_graph_is_a_format_error() {
    let path = temp_file("bad.txt", "5 2\n1 2\n3 1\n");
    let o = run(&["simplex-find", "--in", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn reduce_reports_exact_and_empirical() {
    let o = run(&["reduce", "--n", "12", "--r", "2", "--trials", "10000", "--seed", "7", "--exact"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("exact=16/55"), "{text}");
    assert!(text.contains("empirical="));
}

#[test]
fn identical_arguments_give_identical_bytes() {
    let args = ["reduce", "--n", "9", "--r", "2", "--trials", "300", "--seed", "3"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let args = ["concentration", "violations", "--grid", "16,32", "--trials", "3", "--seed", "5"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn lp_check_flags_a_bad_parameter_file() {
    let path = temp_file("bad-params.txt", "b_12=2\n");
    let o = run(&["lp-check", "--in", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "missing parameters are a format error");
    let mut body = String::new();
    for line in stdout(&run(&["lp-check"])).lines().take(30) {
        body.push_str(&if line.starts_with("b_12=") { "b_12=2".to_string() } else { line.to_string() });
        body.push('\n');
    }
    let path = temp_file("wide-b12.txt", &body);
    let o = run(&["lp-check", "--in", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("admissible=no"));
    assert!(text.contains("violation\tfamily 1"), "{text}");
}

#[test]
fn nested_bound_from_config() {
    let path = temp_file("ed.cfg", "mode: exponent\nlevel 1: 1 2/3 2\nS: 2/3\nU_1: 0\nC: none\n");
    let o = run(&["nested-bound", "--in", path.to_str().unwrap(), "--exact"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("value=2/3"));
    let path = temp_file("broken.cfg", "level 1: 4 2\n");
    assert_eq!(run(&["nested-bound", "--in", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn lg_eval_reports_complexity() {
    let stage = random_symmetric_stage(&mut stream_rng(9, 0), 3, 2, 2, 1, 1, 2);
    let (w, _) = weight_symmetric_stage(&stage).unwrap();
    let text = stage.to_learning_graph(&w).to_text().unwrap();
    let path = temp_file("stage.lg", &text);
    let o = run(&["lg-eval", "--in", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("valid\n"));
    assert!(out.contains("c0=") && out.contains("c1=") && out.contains("complexity="));
}

#[test]
fn concentration_reports() {
    let o = run(&["concentration", "violations", "--trials", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let o = run(&["concentration", "scaling", "--load", "vertex", "--grid", "64,128"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["concentration", "tails"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 750);
}

#[test]
fn out_flag_writes_the_report() {
    let dir = std::env::temp_dir().join(format!("hsimplex-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.txt");
    let o = run(&["lp-check", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().contains("admissible=yes"));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}
