use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

const EX1: [&str; 4] = ["--fn", "2 - x + sin(2*pi*x)", "--domain", "[0,1]"];
const EX2: [&str; 4] = ["--fn", "1/x", "--domain", "[-2,-1]u[1,2]"];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hullbound"))
        .args(args)
        .output()
        .unwrap()
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn with(cmd: &str, base: [&str; 4], rest: &[&str]) -> Vec<String> {
    std::iter::once(cmd)
        .chain(base)
        .chain(rest.iter().copied())
        .map(String::from)
        .collect()
}

fn run_owned(args: Vec<String>) -> Output {
    run(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn bounds_for_disconnected_domain() {
    let v = json_of(&run_owned(with("bounds", EX2, &["--mean", "0"])));
    assert_eq!(v["lower"].as_f64(), Some(-0.5));
    assert_eq!(v["upper"].as_f64(), Some(0.5));
    assert_eq!(v["f_at_mean"], "undefined");
}

#[test]
fn bounds_example_one_at_half() {
    let v = json_of(&run_owned(with("bounds", EX1, &["--mean", "0.5"])));
    assert!((v["lower"].as_f64().unwrap() - 0.817540).abs() < 1e-5);
    assert!((v["upper"].as_f64().unwrap() - 2.182460).abs() < 1e-5);
}

#[test]
fn negative_mean_is_not_a_flag() {
    let v = json_of(&run_owned(with("bounds", EX2, &["--mean", "-1.5"])));
    assert_eq!(v["lower"].as_f64(), Some(-0.75));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["envelope", "--domain", "[0,1]"]).status.code(), Some(2));
    assert_eq!(run(&["bounds", "--fn", "x"]).status.code(), Some(2));
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
    let out = run(&["bounds", "--fn", "x", "--domain", "[0,1]", "--mean", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside"));
    assert_eq!(
        run(&["bounds", "--fn", "1/(", "--domain", "[0,1]", "--mean", "0"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let args = with("oracle", EX1, &["--trials", "500", "--seed", "9"]);
    let a = run_owned(args.clone());
    let b = Command::new(env!("CARGO_BIN_EXE_hullbound"))
        .args(&args)
        .env("HULLBOUND_THREADS", "1")
        .output()
        .unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run_owned(with("envelope", EX1, &["--resolution", "257"]));
    let d = run_owned(with("envelope", EX1, &["--resolution", "257"]));
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn floats_have_seventeen_significant_digits() {
    let out = run_owned(with("bounds", EX1, &["--mean", "0.5"]));
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.contains("\"lower\"")).unwrap();
    let number = line.split(": ").nth(1).unwrap().trim_end_matches(',');
    let mantissa = number.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{number}");
}

#[test]
fn envelope_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("ex2");
    let out = run_owned(with("envelope", EX2, &["--out", out_dir.to_str().unwrap()]));
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("envelope.json")).unwrap()).unwrap();
    assert_eq!(v["lower"]["shape"], "convex");
    let lower: Vec<(f64, f64)> = serde_json::from_value(v["lower"]["breakpoints"].clone()).unwrap();
    assert_eq!(lower, vec![(-2.0, -0.5), (-1.0, -1.0), (2.0, 0.5)]);
    for name in ["lower.csv", "upper.csv", "hull.csv"] {
        let text = fs::read_to_string(out_dir.join(name)).unwrap();
        assert!(text.lines().count() > 2, "{name}");
    }
    let upper = fs::read_to_string(out_dir.join("upper.csv")).unwrap();
    assert_eq!(upper.lines().next(), Some("x,y"));
    assert_eq!(upper.lines().count(), 4);
}

#[test]
fn envelope_csv_on_stdout() {
    let out = run_owned(with("envelope", EX2, &["--format", "csv", "--resolution", "65"]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("curve,x,y"));
    for curve in ["lower,", "upper,", "hull,"] {
        assert!(text.lines().any(|l| l.starts_with(curve)));
    }
}

#[test]
fn witness_at_origin() {
    let v = json_of(&run_owned(with("witness", EX2, &["--at", "0,0"])));
    assert_eq!(v["verified"], true);
    assert!(v["support"].as_array().unwrap().len() <= 3);
    assert!(v["max_error"].as_f64().unwrap() <= 1e-9);
    assert_eq!(run_owned(with("witness", EX2, &["--at", "0,3"])).status.code(), Some(1));
}

#[test]
fn constants_and_undefined_ratios() {
    let v = json_of(&run_owned(with("constants", EX1, &["--resolution", "4097"])));
    assert!((v["c_hat_l"].as_f64().unwrap() - 0.5).abs() < 0.05);
    assert!((v["c_hat_u"].as_f64().unwrap() - 6.5).abs() < 0.1);
    let v = json_of(&run_owned(with("constants", EX2, &[])));
    assert_eq!(v["c_hat_l"], "undefined");
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    fs::write(
        &path,
        r#"{"fn": "1/x", "domain": [[1, 2], [-2, -1]], "resolution": 65, "mean": 0}"#,
    )
    .unwrap();
    let cfg = path.to_str().unwrap();
    let printed = json_of(&run(&[
        "bounds",
        "--config",
        cfg,
        "--resolution",
        "129",
        "--print-config",
    ]));
    assert_eq!(printed["domain"], "[-2,-1]u[1,2]");
    assert_eq!(printed["resolution"], 129);
    assert_eq!(printed["format"], "json");
    let v = json_of(&run(&["bounds", "--config", cfg]));
    assert_eq!(v["upper"].as_f64(), Some(0.5));
    fs::write(&path, r#"{"fn": "x", "unknown": 1}"#).unwrap();
    assert_eq!(run(&["bounds", "--config", cfg]).status.code(), Some(1));
}

#[test]
fn print_config_records_defaults() {
    let v = json_of(&run_owned(with("oracle", EX1, &["--print-config"])));
    assert_eq!(v["resolution"], 2049);
    assert_eq!(v["trials"], 10000);
    assert!(v["seed"].is_u64());
    assert_eq!(v["tolerance"].as_f64(), Some(1e-9));
}

#[test]
fn examples_pass() {
    for name in ["ex1", "ex2"] {
        let out = run(&["example", name]);
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("PASS") && !text.contains("FAIL"), "{text}");
    }
    let text = String::from_utf8(run(&["example", "ex2"]).stdout).unwrap();
    assert!(text.contains("note:"));
}

#[test]
fn random_verification_passes() {
    let v = json_of(&run_owned(with("verify-markov", EX1, &["--trials", "10"])));
    assert_eq!(v["violations"], 0);
    assert_eq!(v["checked"], 80);
    let v = json_of(&run_owned(with(
        "verify-conditional",
        EX2,
        &["--trials", "10", "--seed", "3"],
    )));
    assert_eq!(v["violations"], 0);
    assert_eq!(v["checked"], 640);
}

#[test]
fn explicit_instances() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    fs::write(
        &m,
        r#"{"matrix": [[0.5, 0.5, 0.0], [0.0, 0.25, 0.75]], "x": [-2, 2, 1]}"#,
    )
    .unwrap();
    let v = json_of(&run_owned(with(
        "verify-markov",
        EX2,
        &["--input", m.to_str().unwrap()],
    )));
    assert_eq!(v["coordinates"].as_array().unwrap().len(), 2);
    assert_eq!(v["coordinates"][0]["mean_x"].as_f64(), Some(0.0));
    assert_eq!(v["coordinates"][0]["f_at_mean"], "undefined");

    let c = dir.path().join("c.json");
    fs::write(
        &c,
        r#"{"weights": [0.25, 0.25, 0.5], "partition": [[0, 2], [1]], "x": [-1, 1, 2]}"#,
    )
    .unwrap();
    let v = json_of(&run_owned(with(
        "verify-conditional",
        EX2,
        &["--input", c.to_str().unwrap()],
    )));
    assert_eq!(v["violations"], 0);

    fs::write(&m, r#"{"matrix": [[0.5, 0.6]], "x": [1, 2]}"#).unwrap();
    assert_eq!(
        run_owned(with("verify-markov", EX2, &["--input", m.to_str().unwrap()]))
            .status
            .code(),
        Some(1)
    );
}
