//! CLI contract tests: exit codes, metric-file loading, output schema and
//! byte-level determinism of the shipped binary.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_finslerlab"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn usage_errors_exit_2() {
    let (code, _, err) = run(&["frobnicate"]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown command"));

    let (code, _, err) = run(&["eval", "--bogus"]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown flag"));

    let (code, _, _) = run(&["eval", "--metric"]);
    assert_eq!(code, 2);

    let (code, _, err) = run(&["verify", "--example", "not_a_metric"]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown catalog metric"));
}

#[test]
fn metric_file_loading_and_parse_errors() {
    let dir = std::env::temp_dir().join(format!("finslerlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let good = dir.join("euclid2.fm");
    std::fs::write(&good, "dim=2\nenergy=y1^2+y2^2\n").unwrap();
    let (code, out, _) = run(&[
        "eval",
        "--metric",
        good.to_str().unwrap(),
        "--point",
        "x=0,0;y=1,0",
        "--tensor",
        "cartan",
    ]);
    assert_eq!(code, 0);
    // the Cartan tensor of the flat plane is identically zero
    assert!(out.contains("\"cartan\""));
    assert!(!out.replace("0.0000000000000000e0", "ZERO").contains("e-"));

    let bad = dir.join("broken.fm");
    std::fs::write(&bad, "dim=2\nenergy=(y1^2+y3^2)/2\n").unwrap();
    let (code, _, err) = run(&[
        "eval",
        "--metric",
        bad.to_str().unwrap(),
        "--point",
        "x=0,0;y=1,0",
    ]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("unknown variable y3"), "{err}");

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn check_failure_exits_1() {
    // a generic direction on the product metric violates the SC-condition
    let (code, out, _) = run(&[
        "check",
        "--metric",
        "product3d",
        "--field",
        "1; 0.7; -0.3",
        "--kind",
        "sc",
        "--xsamples",
        "6",
    ]);
    assert_eq!(code, 1);
    assert!(out.contains("\"pass\": false"));

    // the semi-concurrent family passes
    let (code, out, _) = run(&[
        "check",
        "--metric",
        "conic_randers_lift",
        "--field",
        "0; 0; x3",
        "--kind",
        "sc",
        "--xsamples",
        "6",
    ]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("\"pass\": true"));
}

#[test]
fn verify_passes_and_out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("finslerlab-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let (code, out, _) = run(&[
        "verify",
        "--example",
        "euclidean_n",
        "--tol",
        "1e-12",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.is_empty(), "report goes to the file, not stdout");
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.contains("\"passed\": true"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn json_schema_top_level_keys_sorted() {
    let (code, out, _) = run(&["catalog-list"]);
    assert_eq!(code, 0);
    let command = out.find("\"command\"").unwrap();
    let config = out.find("\"config_echo\"").unwrap();
    let results = out.find("\"results\"").unwrap();
    let version = out.find("\"tool_version\"").unwrap();
    let verdicts = out.find("\"verdicts\"").unwrap();
    assert!(command < config && config < results && results < version && version < verdicts);
    assert!(out.starts_with("{\n"));
    assert!(out.ends_with("}\n"));
}

#[test]
fn binary_output_is_byte_identical_across_runs() {
    for args in [
        vec![
            "classify",
            "--metric",
            "conic_randers_lift",
            "--xsamples",
            "6",
            "--seed",
            "3",
        ],
        vec![
            "scfind",
            "--metric",
            "ex5_3",
            "--x",
            "1,1,1,1",
            "--ysamples",
            "30",
            "--seed",
            "0",
        ],
        vec!["verify", "--example", "product3d", "--tol", "1e-8"],
    ] {
        let (code_a, out_a, _) = run(&args);
        let (code_b, out_b, _) = run(&args);
        assert_eq!(code_a, code_b);
        assert_eq!(out_a, out_b, "bytes differ for {:?}", args);
        assert!(!out_a.is_empty());
    }
}

#[test]
fn thread_cap_does_not_change_output() {
    let args = [
        "classify",
        "--metric",
        "ex5_2",
        "--xsamples",
        "8",
        "--seed",
        "1",
    ];
    let one = bin()
        .args(args)
        .env("FINSLERLAB_THREADS", "1")
        .output()
        .unwrap();
    let many = bin()
        .args(args)
        .env("FINSLERLAB_THREADS", "8")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(
        String::from_utf8(one.stdout).unwrap(),
        String::from_utf8(many.stdout).unwrap()
    );
}

#[test]
fn text_format_is_deterministic_and_human_oriented() {
    let args = ["verify", "--example", "ex5_1", "--format", "text"];
    let (code, out_a, _) = run(&args);
    assert_eq!(code, 0);
    let (_, out_b, _) = run(&args);
    assert_eq!(out_a, out_b);
    assert!(out_a.contains("passed: true"));
    assert!(!out_a.starts_with('{'));
}

#[test]
fn scfind_report_shape() {
    let (code, out, _) = run(&[
        "scfind",
        "--metric",
        "ex5_2",
        "--x",
        "1,1,1,1",
        "--ysamples",
        "40",
        "--seed",
        "0",
    ]);
    assert_eq!(code, 0);
    for key in [
        "\"nullspaces\"",
        "\"consistent_dimension\"",
        "\"candidate_field\"",
        "\"singular_values\"",
        "\"invariants\"",
    ] {
        assert!(out.contains(key), "missing {key} in\n{out}");
    }
    // the e2 family is matched as the candidate
    assert!(out.contains("\"candidate_field\": \"0; 1; 0; 0\""));
}

#[test]
fn eval_potential_check_via_potential_flag() {
    let (code, out, _) = run(&[
        "check",
        "--metric",
        "conic_randers_lift",
        "--potential",
        "x3",
        "--kind",
        "f",
        "--xsamples",
        "6",
    ]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("\"pass\": true"));

    // --potential with kind sc is a usage error
    let (code, _, err) = run(&[
        "check",
        "--metric",
        "conic_randers_lift",
        "--potential",
        "x3",
        "--kind",
        "sc",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("--potential"));
}
