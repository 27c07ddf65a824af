//! End-to-end tests of the `qobs` binary: exit-code contract, report
//! formats, determinism, and golden-file comparisons for the shipped
//! scenario fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qobs"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(fixture(&format!("golden/{name}")))
        .unwrap_or_else(|e| panic!("reading golden file {name}: {e}"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawning qobs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn code_of(out: &Output) -> i32 {
    out.status.code().expect("process exited with a code")
}

fn write_scenario(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

// ---- exit-code contract -------------------------------------------------

#[test]
fn check_pr_realizable_fixture_exits_zero() {
    let out = run(&["check-pr", fixture("cavity.json").to_str().unwrap()]);
    assert_eq!(code_of(&out), 0, "stderr: {:?}", out.stderr);
    let text = stdout_of(&out);
    assert!(text.contains("\"realizable\": true"), "{text}");
}

#[test]
fn check_pr_violating_plant_exits_one() {
    // A = I with B = 0 breaks the commutation-preservation identity:
    // A Theta + Theta A^T = 2 J != 0.
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        &dir,
        "not_pr.json",
        r#"{
  "name": "not_pr",
  "n": 2, "n_w": 2, "n_y": 2,
  "theta": { "kind": "canonical" },
  "A": [[1.0, 0.0], [0.0, 1.0]],
  "B": [[0.0, 0.0], [0.0, 0.0]],
  "C": [[0.0, 0.0], [0.0, 0.0]],
  "D": [[1.0, 0.0], [0.0, 1.0]]
}"#,
    );
    let out = run(&["check-pr", path.to_str().unwrap()]);
    assert_eq!(code_of(&out), 1);
    assert!(stdout_of(&out).contains("\"realizable\": false"));
}

#[test]
fn check_pr_zero_system_exits_zero() {
    // The all-zero system satisfies both realizability identities trivially.
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        &dir,
        "zero.json",
        r#"{
  "name": "zero",
  "n": 2, "n_w": 2, "n_y": 2,
  "theta": { "kind": "canonical" },
  "A": [[0.0, 0.0], [0.0, 0.0]],
  "B": [[0.0, 0.0], [0.0, 0.0]],
  "C": [[0.0, 0.0], [0.0, 0.0]],
  "D": [[1.0, 0.0], [0.0, 1.0]]
}"#,
    );
    let out = run(&["check-pr", path.to_str().unwrap()]);
    assert_eq!(code_of(&out), 0);
    assert!(stdout_of(&out).contains("\"realizable\": true"));
}

#[test]
fn malformed_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(&dir, "garbage.json", "this is not json {{{");
    let out = run(&["check-pr", path.to_str().unwrap()]);
    assert_eq!(code_of(&out), 2);
    assert!(stdout_of(&out).contains("\"error\""));
}

#[test]
fn missing_file_exits_two() {
    let out = run(&["solve-filter", "/nonexistent/scenario.json"]);
    assert_eq!(code_of(&out), 2);
}

#[test]
fn wrong_matrix_shape_exits_two() {
    // A declared 2x2 but given three rows.
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        &dir,
        "bad_shape.json",
        r#"{
  "name": "bad_shape",
  "n": 2, "n_w": 2, "n_y": 2,
  "theta": { "kind": "canonical" },
  "A": [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
  "B": [[0.0, 0.0], [0.0, 0.0]],
  "C": [[0.0, 0.0], [0.0, 0.0]],
  "D": [[1.0, 0.0], [0.0, 1.0]]
}"#,
    );
    let out = run(&["check-pr", path.to_str().unwrap()]);
    assert_eq!(code_of(&out), 2);
}

/// Unstable yet realizable plant with no useful measurement: the optimal
/// gain is zero, so the covariance flow grows without bound.
fn divergent_scenario(dir: &tempfile::TempDir) -> PathBuf {
    write_scenario(
        dir,
        "divergent.json",
        r#"{
  "name": "divergent",
  "n": 2, "n_w": 4, "n_y": 2,
  "theta": { "kind": "canonical" },
  "A": [[0.5, 0.0], [0.0, 0.5]],
  "B": [[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, -1.0]],
  "C": [[0.0, 0.0], [0.0, 0.0]],
  "D": [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]],
  "solver": { "horizon": 50.0 }
}"#,
    )
}

#[test]
fn non_convergent_flow_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let path = divergent_scenario(&dir);
    // the plant itself is fine ...
    let out = run(&["check-pr", path.to_str().unwrap()]);
    assert_eq!(code_of(&out), 0);
    // ... but the Riccati flow never settles
    let out = run(&["solve-filter", path.to_str().unwrap()]);
    assert_eq!(code_of(&out), 4);
    assert!(stdout_of(&out).contains("\"status\": \"non-convergent"));
}

#[test]
fn infeasible_augmentation_exits_five() {
    // The cavity defect needs two vacuum channels; request zero.
    let dir = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(fixture("cavity.json")).unwrap();
    let mut sc: serde_json::Value = serde_json::from_str(&base).unwrap();
    sc["coherent"] = serde_json::json!({ "enabled": true, "n_v": 0 });
    let path = write_scenario(&dir, "cavity_nv0.json", &sc.to_string());
    let out = run(&["make-coherent", path.to_str().unwrap()]);
    assert_eq!(code_of(&out), 5);
    assert!(stdout_of(&out).contains("\"error\""));
}

#[test]
fn coherent_on_already_realizable_estimator_exits_three() {
    // Fully classical plant (degenerate commutation matrix) with only
    // measurement noise: the covariance decays to zero, the gain becomes
    // rank deficient, and the estimator is already realizable — nothing
    // to augment.
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        &dir,
        "already_pr.json",
        r#"{
  "name": "already_pr",
  "n": 2, "n_w": 2, "n_y": 2,
  "theta": { "kind": "degenerate", "n_prime": 2 },
  "A": [[-1.0, 0.0], [0.0, -1.0]],
  "B": [[0.0, 0.0], [0.0, 0.0]],
  "C": [[1.0, 0.0], [0.0, 0.0]],
  "D": [[1.0, 0.0], [0.0, 1.0]],
  "solver": { "horizon": 20.0 }
}"#,
    );
    let out = run(&["make-coherent", path.to_str().unwrap()]);
    assert_eq!(code_of(&out), 3);
    assert!(stdout_of(&out).contains("already physically realizable"));
}

// ---- golden-file comparisons -------------------------------------------

#[test]
fn golden_reports_match() {
    let cases: &[(&str, &str, &str)] = &[
        ("check-pr", "cavity.json", "cavity_check_pr.json"),
        ("solve-filter", "squeezer.json", "squeezer_solve.json"),
        ("solve-filter", "dpa.json", "dpa_solve.json"),
        ("solve-filter", "atom_cavity.json", "atom_cavity_solve.json"),
        ("solve-filter", "optical_feedback.json", "optical_feedback_solve.json"),
        ("make-coherent", "squeezer.json", "squeezer_coherent.json"),
        ("make-coherent", "dpa.json", "dpa_coherent.json"),
        ("make-coherent", "atom_cavity.json", "atom_cavity_coherent.json"),
    ];
    for (cmd, scenario, expected) in cases {
        let out = run(&[cmd, fixture(scenario).to_str().unwrap()]);
        assert_eq!(code_of(&out), 0, "{cmd} {scenario} stderr: {:?}", out.stderr);
        let got = stdout_of(&out);
        assert_eq!(got.trim_end(), golden(expected).trim_end(), "{cmd} {scenario}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let path = fixture("squeezer.json");
    let args = ["solve-filter", path.to_str().unwrap(), "--dt", "0.002"];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(code_of(&first), 0);
    assert_eq!(first.stdout, second.stdout);
}

// ---- output plumbing ----------------------------------------------------

#[test]
fn out_flag_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = run(&[
        "check-pr",
        fixture("cavity.json").to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code_of(&out), 0);
    assert!(stdout_of(&out).is_empty());
    let body = std::fs::read_to_string(&report).unwrap();
    assert_eq!(body.trim_end(), golden("cavity_check_pr.json").trim_end());
}

#[test]
fn csv_format_for_check_pr() {
    let out = run(&[
        "check-pr",
        fixture("cavity.json").to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(code_of(&out), 0);
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("scenario,realizable,max_residual"));
    assert!(lines.next().unwrap().starts_with("cavity,true,"));
}

#[test]
fn trajectory_flag_writes_solver_csv() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.csv");
    let out = run(&[
        "solve-filter",
        fixture("cavity.json").to_str().unwrap(),
        "--trajectory",
        traj.to_str().unwrap(),
    ]);
    assert_eq!(code_of(&out), 0);
    let body = std::fs::read_to_string(&traj).unwrap();
    let mut lines = body.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("t,"), "{header}");
    assert!(header.contains("traceP"), "{header}");
    assert!(lines.count() >= 2, "trajectory should carry sampled rows");
}

#[test]
fn solver_overrides_change_the_run() {
    // A horizon too short to converge must be reported as such.
    let out = run(&[
        "solve-filter",
        fixture("squeezer.json").to_str().unwrap(),
        "--horizon",
        "0.01",
    ]);
    assert_eq!(code_of(&out), 4);
}

// ---- multi-scenario runs ------------------------------------------------

#[test]
fn multiple_scenarios_merge_in_order() {
    let out = run(&[
        "solve-filter",
        fixture("cavity.json").to_str().unwrap(),
        fixture("squeezer.json").to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert_eq!(code_of(&out), 0);
    let parsed: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let arr = parsed.as_array().expect("merged report is a JSON array");
    assert_eq!(arr.len(), 2);
    assert_eq!(arr[0]["scenario"], "cavity");
    assert_eq!(arr[1]["scenario"], "squeezer");
}

#[test]
fn jobs_flag_does_not_change_output() {
    let paths = [
        fixture("cavity.json"),
        fixture("squeezer.json"),
        fixture("dpa.json"),
    ];
    let mut args = vec!["check-pr"];
    args.extend(paths.iter().map(|p| p.to_str().unwrap()));
    let serial = run(&args);
    let mut par = args.clone();
    par.extend(["--jobs", "3"]);
    let parallel = run(&par);
    assert_eq!(serial.stdout, parallel.stdout);
    assert_eq!(code_of(&serial), code_of(&parallel));
}

#[test]
fn worst_exit_code_wins_across_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let bad = divergent_scenario(&dir);
    let out = run(&[
        "solve-filter",
        fixture("cavity.json").to_str().unwrap(),
        bad.to_str().unwrap(),
    ]);
    assert_eq!(code_of(&out), 4);
    let parsed: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(parsed.as_array().unwrap().len(), 2);
}

// ---- simulate -----------------------------------------------------------

fn last_deviation(csv: &str) -> f64 {
    let line = csv
        .lines()
        .rev()
        .find(|l| l.starts_with("max_deviation,"))
        .expect("simulate output ends with a max_deviation line");
    line.split(',').nth(1).unwrap().parse().unwrap()
}

#[test]
fn simulate_matches_riccati_flow() {
    let out = run(&["simulate", fixture("cavity.json").to_str().unwrap()]);
    assert_eq!(code_of(&out), 0, "stderr: {:?}", out.stderr);
    let text = stdout_of(&out);
    assert!(text.starts_with("t,"), "csv header expected");
    assert!(last_deviation(&text) < 1e-6);
}

#[test]
fn simulate_with_coherent_coupling_converges_to_augmented_cost() {
    let out = run(&["simulate", fixture("squeezer.json").to_str().unwrap()]);
    assert_eq!(code_of(&out), 0, "stderr: {:?}", out.stderr);
    let text = stdout_of(&out);
    assert!(last_deviation(&text) < 1e-6);
    // final row's error-covariance trace approaches the augmented cost
    let last_row = text
        .lines()
        .rev()
        .find(|l| !l.starts_with("max_deviation") && !l.is_empty())
        .unwrap();
    let err_trace: f64 = last_row.rsplit(',').next().unwrap().parse().unwrap();
    assert!(
        (err_trace - 3.5912).abs() < 1e-3,
        "expected augmented cost, got {err_trace}"
    );
}
