//! The command line: fan file round trips, golden JSON output, exit codes.
//!
//! Set `UPDATE_GOLDEN=1` to rewrite the files under `tests/golden/`.

use std::path::{Path, PathBuf};
use std::process::Command;

use fantastack::cli::{parse_fan_file, render_fan_file, run_command};

const FIXTURES: [&str; 6] = ["smooth2", "a1", "conifold", "m3", "a1_full", "p1"];

fn dir(sub: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join(sub)
}

fn fixture(name: &str) -> String {
    dir("fixtures").join(format!("{name}.json")).display().to_string()
}

fn run(args: &[&str]) -> fantastack::cli::CommandResult {
    run_command(std::iter::once("fantastack").chain(args.iter().copied()))
}

fn check_golden(file: &str, args: &[&str], exit_code: i32) {
    let out = run(args);
    assert_eq!(out.exit_code, exit_code, "{args:?}: {:?}", out.diagnostics);
    let path = dir("golden").join(file);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, format!("{}\n", out.payload)).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(out.payload.trim_end(), want.trim_end(), "{args:?} against {file}");
}

#[test]
fn fan_files_round_trip() {
    for name in FIXTURES.iter().chain(&["nonqg"]) {
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        let (fan, warnings) = parse_fan_file(&text).unwrap();
        assert!(warnings.is_empty(), "{name}: {warnings:?}");
        let (again, _) = parse_fan_file(&render_fan_file(&fan)).unwrap();
        assert_eq!(again, fan, "{name}");
    }
}

#[test]
fn golden_per_fixture() {
    for name in FIXTURES {
        let fan = fixture(name);
        check_golden(
            &format!("{name}_analyze.json"),
            &["analyze", "--fan", &fan, "--format", "json"],
            0,
        );
        check_golden(
            &format!("{name}_hilbert_dual.json"),
            &["hilbert-basis", "--dual", "--fan", &fan, "--format", "json"],
            0,
        );
        check_golden(
            &format!("{name}_stringy.json"),
            &["stringy", "--fan", &fan, "--format", "json"],
            0,
        );
    }
}

#[test]
fn golden_point_commands() {
    check_golden(
        "a1_sep_1_1.json",
        &["sep", "--fan", &fixture("a1"), "--point", "1,1", "--format", "json"],
        0,
    );
    check_golden(
        "a1_full_beta_fiber_2_2.json",
        &[
            "beta-fiber",
            "--fan",
            &fixture("a1_full"),
            "--point",
            "2,2",
            "--format",
            "json",
        ],
        0,
    );
}

#[test]
fn golden_verify() {
    let a1 = fixture("a1");
    let args = [
        "verify",
        "--fan",
        &a1,
        "--grade-bound",
        "6",
        "--precision",
        "12",
        "--format",
        "json",
    ];
    check_golden("a1_verify.json", &args, 2);
    let conifold = fixture("conifold");
    let args = [
        "verify",
        "--fan",
        &conifold,
        "--grade-bound",
        "4",
        "--precision",
        "6",
        "--format",
        "json",
    ];
    check_golden("conifold_verify.json", &args, 0);
}

#[test]
fn table_output_for_the_worked_examples() {
    let out = run(&["sep", "--fan", &fixture("a1"), "--point", "1,1"]);
    assert_eq!((out.exit_code, out.payload.trim()), (0, "0"));

    let out = run(&["stabilizers", "--fan", &fixture("conifold")]);
    assert_eq!(out.exit_code, 0);
    assert!(out.payload.contains("special: true"), "{}", out.payload);

    let out = run(&["stringy", "--fan", &fixture("m3"), "--rational"]);
    assert_eq!(out.payload.trim(), "1 + L^(-2/3) + L^(-4/3)");
}

#[test]
fn non_primitive_ray_warns_on_stderr() {
    let tmp = std::env::temp_dir().join(format!("fantastack-cli-{}.json", std::process::id()));
    std::fs::write(&tmp, r#"{"lattice_rank":2,"rays":[[2,0],[0,1]],"cones":[[0,1]]}"#).unwrap();
    let out = run(&["sep", "--fan", tmp.to_str().unwrap(), "--point", "1,1"]);
    std::fs::remove_file(&tmp).ok();
    assert_eq!(out.exit_code, 0);
    assert_eq!(out.payload.trim(), "1");
    assert!(
        out.diagnostics.iter().any(|d| d.contains("not primitive")),
        "{:?}",
        out.diagnostics
    );
    assert!(!out.payload.contains("warning"));
}

#[test]
fn not_q_gorenstein_stringy_fails() {
    let out = run(&["stringy", "--fan", &fixture("nonqg")]);
    assert_eq!(out.exit_code, 1);
    assert!(out.payload.is_empty());
    assert!(!out.diagnostics.is_empty());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_fantastack");
    let exec = |args: &[&str]| Command::new(bin).args(args).output().unwrap();

    let out = exec(&[
        "verify",
        "--fan",
        &fixture("a1"),
        "--grade-bound",
        "6",
        "--precision",
        "12",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.contains("sep_x_equals_stringy")).unwrap();
    assert!(line.contains("FAIL"), "{text}");

    let out = exec(&["sep", "--fan", &fixture("a1"), "--point", "1,1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "0");

    let out = exec(&["sep", "--fan", &fixture("a1")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}
