use std::path::Path;
use std::process::{Command, Output};

use qlauricella::descriptor::H3_EXAMPLE;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qlauricella"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn example(dir: &Path) -> String {
    let path = dir.join("h3.json");
    std::fs::write(&path, H3_EXAMPLE).unwrap();
    path.to_str().unwrap().to_string()
}

/// JSON report with the wall time removed.
fn body(out: &Output) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("json report");
    v.as_object_mut()
        .unwrap()
        .remove("wall_time_ms")
        .expect("wall time present");
    v
}

#[test]
fn builtin_suites_pass() {
    for name in ["h3", "identities"] {
        let out = run(&["suite", name]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{name}: {}",
            String::from_utf8_lossy(&out.stdout)
        );
    }
}

#[test]
fn poisoned_tolerance_fails() {
    for name in ["h3", "identities"] {
        let out = run(&["suite", name, "--tol", "1e-18", "--format", "json"]);
        assert_eq!(out.status.code(), Some(1));
        let v = body(&out);
        assert!(v["summary"]["failed"].as_u64().unwrap() > 0);
    }
}

#[test]
fn json_reports_carry_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let input = example(dir.path());
    for verb in ["eval", "deriv", "verify", "expand"] {
        let out = run(&[verb, "--input", &input, "--format", "json"]);
        assert_eq!(out.status.code(), Some(0), "{verb}");
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["schema"], "qlauricella/1", "{verb}");
    }
}

#[test]
fn report_bodies_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = example(dir.path());
    let cases: [&[&str]; 4] = [
        &["suite", "identities", "--format", "json"],
        &["suite", "h3", "--format", "json"],
        &["verify", "--input", &input, "--format", "json"],
        &[
            "deriv",
            "--input",
            &input,
            "--format",
            "json",
            "--precision",
            "extended",
        ],
    ];
    for args in cases {
        assert_eq!(body(&run(args)), body(&run(args)), "{args:?}");
    }
}

#[test]
fn text_bodies_are_deterministic() {
    let strip = |o: Output| -> String {
        String::from_utf8(o.stdout)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("wall time"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = strip(run(&["suite", "identities", "--seed", "7"]));
    let b = strip(run(&["suite", "identities", "--seed", "7"]));
    assert_eq!(a, b);
    let c = strip(run(&["suite", "identities", "--seed", "8"]));
    assert_ne!(a, c);
}

#[test]
fn out_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = example(dir.path());
    let out_path = dir.path().join("report.json");
    let out = run(&[
        "verify",
        "--input",
        &input,
        "--format",
        "json",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_path).unwrap()).unwrap();
    assert_eq!(v["command"], "verify");
    assert_eq!(v["tolerance"], 1e-9);
}

#[test]
fn stdin_input() {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = bin()
        .args(["eval", "--input", "-", "--format", "json"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(H3_EXAMPLE.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(body(&out)["summary"]["total"], 1);
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{}").unwrap();
    let bad = bad.to_str().unwrap();
    let missing = dir.path().join("missing.json");
    let missing = missing.to_str().unwrap();
    let cases: [&[&str]; 7] = [
        &["eval", "--input", bad],
        &["verify", "--input", missing],
        &["deriv"],
        &["suite", "no-such-suite"],
        &["suite", "h3", "--tol", "-1"],
        &["suite", "h3", "--precision", "quad"],
        &["frobnicate"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn schema_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, H3_EXAMPLE.replacen("[2.0, 1.0]", "[-2.0, 1.0]", 1)).unwrap();
    let out = run(&["eval", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("series.upper_multi[0].exponents[0]"), "{err}");
}

#[test]
fn suite_without_name_verifies_the_descriptor() {
    let dir = tempfile::tempdir().unwrap();
    let input = example(dir.path());
    let out = run(&["suite", "--input", &input, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(body(&out)["command"], "verify");
}
