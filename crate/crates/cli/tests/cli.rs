//! End-to-end checks of the binary's subcommands and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

fn amoebot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amoebot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn run_line_hex_reports_work_and_validates() {
    let out = amoebot(&[
        "run",
        "--algorithm",
        "hex",
        "--n",
        "20",
        "--init",
        "line",
        "--check",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert!(text.contains("terminated=true"));
    assert!(text.contains("shape_valid=true"));
    assert!(text.contains("work="));
    assert!(text.contains("rounds="));
}

#[test]
fn lowerbound_prints_the_closed_form() {
    let out = amoebot(&["lowerbound", "--algorithm", "hex", "--n", "8"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "30");
    let out = amoebot(&["lowerbound", "--algorithm", "tri", "--n", "6"]);
    assert_eq!(stdout(&out).trim(), "8");
}

#[test]
fn zero_particles_is_a_usage_error() {
    let out = amoebot(&["run", "--algorithm", "tri", "--n", "0"]);
    assert!(!out.status.success());
}

#[test]
fn unknown_algorithm_is_a_usage_error() {
    let out = amoebot(&["run", "--algorithm", "square", "--n", "5"]);
    assert!(!out.status.success());
}

#[test]
fn trace_round_trip_through_validate() {
    let dir = std::env::temp_dir().join(format!("amoebot-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let trace: PathBuf = dir.join("run.trace");
    let out = amoebot(&[
        "run",
        "--algorithm",
        "tri",
        "--n",
        "9",
        "--init",
        "random",
        "--init-seed",
        "2",
        "--sched-seed",
        "4",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = amoebot(&["validate", "--trace", trace.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("trace ok"));

    // A tampered trace is rejected with a distinct exit code.
    let text = std::fs::read_to_string(&trace).unwrap();
    let tampered = dir.join("tampered.trace");
    std::fs::write(&tampered, text.replacen("work=1", "work=9", 1)).unwrap();
    let out = amoebot(&["validate", "--trace", tampered.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn experiment_emits_csv_with_the_documented_header() {
    let dir = std::env::temp_dir().join(format!("amoebot-cli-exp-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let spec_path = dir.join("spec.json");
    let csv_path = dir.join("out.csv");
    std::fs::write(
        &spec_path,
        format!(
            r#"{{
                "algorithm": "tri",
                "n": [5, 9],
                "generator": "random",
                "repetitions": 2,
                "sched_seeds": [1, 2],
                "csv_out": {:?}
            }}"#,
            csv_path.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = amoebot(&["experiment", "--spec", spec_path.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "algorithm,n,init_seed,sched_seed,valid,work,rounds,activations,radius_or_side"
    );
    assert_eq!(lines.count(), 2 * 2 * 2);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn svg_snapshots_are_written() {
    let dir = std::env::temp_dir().join(format!("amoebot-cli-svg-{}", std::process::id()));
    let frames = dir.join("frames");
    std::fs::create_dir_all(&dir).unwrap();
    let out = amoebot(&[
        "run",
        "--algorithm",
        "hex",
        "--n",
        "6",
        "--svg-every",
        "25",
        "--svg-dir",
        frames.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let count = std::fs::read_dir(&frames).unwrap().count();
    assert!(count >= 2, "only {count} frames");
    let first = std::fs::read_to_string(frames.join("frame_000000.svg")).unwrap();
    assert!(first.starts_with("<svg"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exhausted_round_budget_exits_with_code_four() {
    let out = amoebot(&[
        "run",
        "--algorithm",
        "hex",
        "--n",
        "30",
        "--max-rounds",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}
