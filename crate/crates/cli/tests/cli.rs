use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn dir(sub: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(sub)
}

fn data(name: &str) -> String {
    dir("data").join(name).to_string_lossy().into_owned()
}

fn exquant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exquant")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn golden(name: &str, args: &[&str]) {
    let out = exquant(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let expected = fs::read_to_string(dir("tests/golden").join(name)).unwrap();
    assert_eq!(stdout(&out), expected, "{name}");
}

#[test]
fn eval_matches_golden() {
    golden("eval_uniform_l1_x0.json", &["eval", "--problem", &data("worked_uniform_l1.json"), "--x", "0"]);
}

#[test]
fn value_curves_match_golden() {
    for (file, name) in [
        ("worked_uniform_l1.json", "curve_uniform_l1.csv"),
        ("worked_uniform_linf.json", "curve_uniform_linf.csv"),
        ("worked_exponential.json", "curve_exponential.csv"),
    ] {
        golden(name, &["eval", "--problem", &data(file), "--format", "csv"]);
    }
}

#[test]
fn complex_quantize_tree_solve_match_golden() {
    let l1 = data("worked_uniform_l1.json");
    golden("complex_worked.json", &["complex", "--problem", &l1]);
    golden("quantize_uniform_l1.json", &["quantize", "--problem", &l1]);
    golden("tree_uniform_l1.json", &["tree", "--problem", &l1]);
    golden("solve_three_stage.json", &["solve", "--problem", &data("three_stage.json")]);
}

#[test]
fn eval_reports_value_and_subgradient() {
    let v = json(&exquant(&["eval", "--problem", &data("worked_uniform_linf.json"), "--x", "2"]));
    assert_eq!(v["value"]["kind"], "exact");
    assert_eq!(v["value"]["value"], "-2/3");
    let v = json(&exquant(&["eval", "--problem", &data("worked_exponential.json"), "--x", "1"]));
    assert_eq!(v["value"]["value"], "-3/2");
}

#[test]
fn complex_lists_breakpoints() {
    let v = json(&exquant(&["complex", "--problem", &data("worked_uniform_l1.json")]));
    let bps: Vec<&str> = v["complexes"][0]["breakpoints"].as_array().unwrap().iter().map(|b| b.as_str().unwrap()).collect();
    assert_eq!(bps, ["-1/2", "0", "1/2", "1"]);
}

#[test]
fn gaussian_values_are_tagged_approximate() {
    let v = json(&exquant(&["eval", "--problem", &data("worked_gaussian.json"), "--x", "2"]));
    assert_eq!(v["value"]["kind"], "approx");
    let value: f64 = v["value"]["value"].as_str().unwrap().parse().unwrap();
    assert!((value + 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-5);
}

#[test]
fn mc_check_passes_and_is_reproducible() {
    let args = ["mc-check", "--problem", &data("worked_gaussian.json"), "--x", "1/4", "--seed", "42"];
    let first = exquant(&args);
    let second = exquant(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(json(&first)["verdict"], "PASS");
    let mixed = json(&exquant(&["mc-check", "--problem", &data("worked_two_outcomes.json"), "--x", "1/2", "--samples", "20000"]));
    assert_eq!(mixed["verdict"], "PASS");
}

#[test]
fn three_stage_eval_agrees_with_solve() {
    let v = json(&exquant(&["eval", "--problem", &data("three_stage.json"), "--x", "1/2"]));
    let s = json(&exquant(&["solve", "--problem", &data("three_stage.json")]));
    assert_eq!(v["value"], s["value"]);
}

#[test]
fn outside_the_domain_exits_with_a_certificate() {
    let out = exquant(&["eval", "--problem", &data("worked_uniform_l1.json"), "--x=-1"]);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&out);
    assert_eq!(v["status"], "infeasible");
    assert!(v["certificate"]["normal"].is_array());
}

#[test]
fn exit_codes_follow_the_failure_kind() {
    let tmp = std::env::temp_dir().join(format!("exquant-cli-{}", std::process::id()));
    fs::create_dir_all(&tmp).unwrap();

    let garbage = tmp.join("garbage.json");
    fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(exquant(&["eval", "--problem", garbage.to_str().unwrap(), "--x", "0"]).status.code(), Some(1));
    assert_eq!(exquant(&["eval", "--problem", &data("worked_uniform_l1.json"), "--x", "0.5.1"]).status.code(), Some(1));

    let mut problem: Value = serde_json::from_str(&fs::read_to_string(data("worked_uniform_l1.json")).unwrap()).unwrap();
    problem["stages"][0]["outcomes"][0]["prob"] = "1/2".into();
    let bad_probs = tmp.join("bad_probs.json");
    fs::write(&bad_probs, problem.to_string()).unwrap();
    assert_eq!(exquant(&["eval", "--problem", bad_probs.to_str().unwrap(), "--x", "0"]).status.code(), Some(2));

    let mut problem: Value = serde_json::from_str(&fs::read_to_string(data("worked_uniform_l1.json")).unwrap()).unwrap();
    problem["firstStage"]["b"] = serde_json::json!(["-1", "0"]);
    let empty_first = tmp.join("empty_first.json");
    fs::write(&empty_first, problem.to_string()).unwrap();
    let out = exquant(&["solve", "--problem", empty_first.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(json(&out)["certificate"]["farkas"].is_array());

    fs::remove_dir_all(&tmp).unwrap();
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let path = std::env::temp_dir().join(format!("exquant-out-{}.json", std::process::id()));
    let args = ["tree", "--problem", &data("worked_uniform_l1.json")];
    let printed = exquant(&args);
    let written = exquant(&[&args[..], &["--out", path.to_str().unwrap()]].concat());
    assert!(written.status.success());
    assert_eq!(fs::read(&path).unwrap(), printed.stdout);
    fs::remove_file(&path).unwrap();
}
