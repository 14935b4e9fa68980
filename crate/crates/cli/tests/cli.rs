use std::path::PathBuf;
use std::process::{Command, Output};

fn compint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compint"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("compint-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn assert_one_line_diagnostic(out: &Output) {
    let err = stderr(out);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("compint: error: "), "{err}");
}

#[test]
fn exit_0_flow_example() {
    let out = compint(&[
        "eval",
        "--f",
        "exp(-s*t)",
        "--a",
        "0",
        "--b",
        "1",
        "--t",
        "1",
        "--n",
        "1024",
        "--tags",
        "left",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let value: f64 = text
        .lines()
        .next()
        .unwrap()
        .strip_prefix("value")
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((value - 1.541_529_591_874_371_3).abs() <= 2e-3);
    assert!(text.contains("mesh   0.0009765625\n"));
}

#[test]
fn exit_0_identity() {
    let out = compint(&["eval", "--f", "t", "--a", "0", "--b", "0", "--t", "3"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("value  3.0\n"));
}

#[test]
fn exit_1_unwritable_output() {
    let missing = scratch("no-such-dir").join("table.csv");
    let out = compint(&[
        "eval",
        "--f",
        "t",
        "--a",
        "0",
        "--b",
        "1",
        "--t",
        "1",
        "--output",
        missing.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert_one_line_diagnostic(&out);
}

#[test]
fn exit_2_parse_error() {
    let out = compint(&["eval", "--f", "2*s + q", "--a", "0", "--b", "1", "--t", "1"]);
    assert_eq!(code(&out), 2);
    assert_one_line_diagnostic(&out);
    assert!(stderr(&out).contains("column"));
}

#[test]
fn exit_2_flag_errors() {
    for args in [
        &["eval", "--f", "t", "--a", "0", "--b", "1"][..],
        &["eval", "--f", "t", "--a", "1", "--b", "0", "--t", "1"],
        &["eval", "--f", "t", "--a", "0", "--b", "nan", "--t", "1"],
        &[
            "eval", "--f", "t", "--a", "0", "--b", "1", "--t", "1", "--tags", "sideways",
        ],
        &[
            "converge", "--f", "t", "--a", "0", "--b", "1", "--t", "1", "--ref", "guess",
        ],
        &["frobnicate"],
    ] {
        let out = compint(args);
        assert_eq!(code(&out), 2, "{args:?}");
        assert_one_line_diagnostic(&out);
    }
}

#[test]
fn exit_3_integrand_domain() {
    let out = compint(&["eval", "--f", "log(s)", "--a", "0", "--b", "1", "--t", "1"]);
    assert_eq!(code(&out), 3);
    assert_one_line_diagnostic(&out);
}

#[test]
fn exit_4_state_escape() {
    let out = compint(&[
        "eval",
        "--f",
        "t^2",
        "--a",
        "0",
        "--b",
        "2",
        "--t",
        "1",
        "--domain-hi",
        "1e6",
    ]);
    assert_eq!(code(&out), 4);
    assert_one_line_diagnostic(&out);
}

#[test]
fn exit_5_no_convergence() {
    let out = compint(&[
        "eval", "--f", "t^2", "--a", "0", "--b", "0.9", "--t", "1", "--tol", "1e-12", "--n", "16",
        "--n-max", "1024",
    ]);
    assert_eq!(code(&out), 5);
    assert_one_line_diagnostic(&out);
}

#[test]
fn exit_6_audit_failure() {
    let out = compint(&[
        "group-check",
        "--f",
        "t^2",
        "--a",
        "0",
        "--b",
        "0.9",
        "--domain-lo",
        "0",
        "--domain-hi",
        "5",
        "--t-min",
        "0.5",
        "--trials",
        "5",
    ]);
    assert_eq!(code(&out), 6);
    assert_one_line_diagnostic(&out);
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn converge_csv_example() {
    let out = compint(&[
        "converge",
        "--f",
        "exp(-s*t)",
        "--a",
        "0",
        "--b",
        "1",
        "--t",
        "1",
        "--n-min",
        "16",
        "--n-max",
        "4096",
        "--ref",
        "oracle",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,mesh,value,abs_error,rel_error"));
    let ns: Vec<usize> = lines
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(ns, [16, 32, 64, 128, 256, 512, 1024, 2048, 4096]);
    assert!(!text.contains('\r'));
    let fit = stderr(&out);
    let order: f64 = fit
        .strip_prefix("fitted order ")
        .unwrap()
        .split(' ')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((order - 1.0).abs() < 0.05, "{fit}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "converge",
        "--f",
        "exp(-s*t)",
        "--a",
        "0",
        "--b",
        "1",
        "--t",
        "1",
        "--n-min",
        "16",
        "--n-max",
        "1024",
        "--tags",
        "random",
        "--seed",
        "42",
        "--format",
        "csv",
    ];
    let first = compint(&args);
    let second = compint(&args);
    assert_eq!(code(&first), 0);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stderr, second.stderr);

    let audit = [
        "group-check",
        "--f",
        "exp(-s*t)",
        "--a",
        "0",
        "--b",
        "1",
        "--trials",
        "10",
        "--seed",
        "9",
    ];
    assert_eq!(compint(&audit).stdout, compint(&audit).stdout);
}

#[test]
fn output_file_matches_stdout() {
    let path = scratch("eval.csv");
    let args = [
        "eval",
        "--f",
        "exp(-s*t)",
        "--a",
        "0",
        "--b",
        "1",
        "--t",
        "2",
        "--format",
        "csv",
        "--ref",
        "oracle",
    ];
    let direct = compint(&args);
    let mut with_file = args.to_vec();
    with_file.extend(["--output", path.to_str().unwrap()]);
    let written = compint(&with_file);
    assert_eq!(code(&written), 0);
    assert!(written.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
}

#[test]
fn substitution_and_inverse() {
    let out = compint(&[
        "subst",
        "--f",
        "exp(-s*t)",
        "--a",
        "0",
        "--b",
        "1",
        "--t",
        "1",
        "--gamma",
        "s^2",
        "--gamma-prime",
        "2*s",
        "--alpha",
        "0",
        "--beta",
        "1",
        "--tol",
        "1e-7",
        "--n",
        "16",
    ]);
    assert_eq!(code(&out), 0);
    let value: f64 = stdout(&out).lines().next().unwrap()[5..]
        .trim()
        .parse()
        .unwrap();
    assert!((value - 1.541_529_591_874_371_3).abs() <= 1e-5);

    let out = compint(&[
        "inverse",
        "--f",
        "exp(-s*t)",
        "--a",
        "0",
        "--b",
        "1",
        "--t",
        "1.5415295918743713",
    ]);
    assert_eq!(code(&out), 0);
    let value: f64 = stdout(&out).lines().next().unwrap()[5..]
        .trim()
        .parse()
        .unwrap();
    assert!((value - 1.0).abs() <= 1e-5);
}

#[test]
fn closed_form_cases() {
    let out = compint(&[
        "closed-form",
        "--case",
        "volterra",
        "--p",
        "cos(s)",
        "--a",
        "0",
        "--b",
        "1",
        "--t",
        "2",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("source exact"));
    let value: f64 = text.lines().nth(1).unwrap()[5..].trim().parse().unwrap();
    assert!((value - 2.0 * 1f64.sin().exp()).abs() <= 1e-14);

    let out = compint(&[
        "closed-form",
        "--case",
        "theorem2_exp_neg_st",
        "--a",
        "0",
        "--b",
        "1",
        "--t",
        "1",
    ]);
    assert!(stdout(&out).contains("source oracle-backed"));

    let out = compint(&[
        "closed-form",
        "--case",
        "exp_power_k",
        "--k",
        "2",
        "--a",
        "0.5",
        "--b",
        "1",
        "--t",
        "1",
    ]);
    assert_eq!(code(&out), 2);
    assert_one_line_diagnostic(&out);
}
