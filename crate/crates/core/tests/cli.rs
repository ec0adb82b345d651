use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stabring"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary spawns");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    std::fs::read_to_string(path).expect("golden file present")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn replay_file(path: &Path) -> Output {
    run(&["replay", "--trace-in", path.to_str().unwrap()])
}

fn write_temp(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn simulate_round_robin_matches_golden() {
    let o = run(&[
        "simulate",
        "--n",
        "2",
        "--k",
        "3",
        "--init",
        "0,0,0",
        "--daemon",
        "round-robin",
        "--max-steps",
        "2",
        "--stop-on-legit",
        "false",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("simulate_n2_k3_round_robin.jsonl"));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[2].ends_with(r#""after":[1,1,0]}"#));
    assert!(stderr(&o).contains("max-steps"));
}

#[test]
fn simulate_from_legitimate_start_takes_no_steps() {
    let o = run(&["simulate", "--n", "2", "--k", "2", "--init", "1,1,0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1);
    assert!(stderr(&o).contains("after 0 steps: reached-legitimate"));
}

#[test]
fn simulate_rejects_wrong_length() {
    let o = run(&["simulate", "--n", "2", "--k", "2", "--init", "0,0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("expected 3 node states"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["simulate", "--k", "2"]).status.code(), Some(2));
    assert_eq!(
        run(&["simulate", "--n", "2", "--k", "2", "--daemon", "fair"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["check", "--n", "2", "--nodes", "3", "--k", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["sweep", "--n-from", "3", "--n-to", "2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn nodes_alias_means_n_plus_one() {
    let o = run(&[
        "simulate",
        "--nodes",
        "3",
        "--k",
        "3",
        "--init",
        "all-equal:2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let header = stdout(&o).lines().next().unwrap().to_string();
    assert!(header.contains(r#""n":2"#));
    assert!(stderr(&o).contains("n=2 (highest node index), 3 nodes"));
}

#[test]
fn illegal_script_exits_one_with_step() {
    let o = run(&[
        "simulate",
        "--n",
        "2",
        "--k",
        "2",
        "--init",
        "1,1,0",
        "--daemon",
        "scripted:1",
        "--stop-on-legit",
        "false",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("illegal schedule at step 0"));
}

#[test]
fn interactive_daemon_reads_stdin_until_eof() {
    let o = run_with_stdin(
        &[
            "simulate",
            "--n",
            "2",
            "--k",
            "3",
            "--init",
            "0,0,0",
            "--daemon",
            "interactive",
            "--stop-on-legit",
            "false",
        ],
        "0\n2\n1\n",
    );
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    // "2" is not privileged at [1,0,0]; it is re-prompted and "1" is taken.
    assert_eq!(out.lines().count(), 3);
    assert!(stderr(&o).contains("not a privileged node"));
    assert!(stderr(&o).contains("user-stop"));
}

#[test]
fn check_reports_match_golden() {
    let o = run(&["check", "--n", "2", "--k", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("check_n2_k2.json"));

    let o = run(&["check", "--n", "3", "--k", "2", "--property", "convergence"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), golden("check_n3_k2_convergence.json"));
}

#[test]
fn check_examples() {
    for (n, k, prop) in [("3", "3", "all"), ("2", "3", "convergence")] {
        let o = run(&["check", "--n", n, "--k", k, "--property", prop]);
        assert_eq!(o.status.code(), Some(0), "n={n} k={k}");
    }
    let o = run(&["check", "--n", "3", "--k", "3", "--format", "text"]);
    assert!(stdout(&o).contains("convergence: holds (worst case 14 steps)"));
}

#[test]
fn check_oversized_exits_two_with_size() {
    let o = run(&["check", "--n", "3", "--k", "3", "--state-limit", "80"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("81 configurations"));
}

#[test]
fn frontier_lasso_replays() {
    let dir = tempfile::tempdir().unwrap();
    let lasso = dir.path().join("lasso.jsonl");
    let o = run(&[
        "check",
        "--n",
        "4",
        "--k",
        "2",
        "--property",
        "convergence",
        "--lasso-out",
        lasso.to_str().unwrap(),
    ]);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let verdict = report["properties"][0]["verdict"].as_str().unwrap();
    match verdict {
        "diverges" => {
            assert_eq!(o.status.code(), Some(1));
            assert_eq!(replay_file(&lasso).status.code(), Some(0));
        }
        _ => assert_eq!(o.status.code(), Some(0)),
    }
}

#[test]
fn lasso_cycle_twice_replays() {
    let o = run(&["check", "--n", "3", "--k", "2", "--property", "convergence"]);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let cycle = report["properties"][0]["lasso"]["cycle"]
        .as_array()
        .unwrap();
    let mut body = String::from(
        r#"{"header":true,"n":3,"k":2,"strategy":"lasso","seed":null,"version":"0.1.0"}"#,
    );
    body.push('\n');
    for _ in 0..2 {
        for rec in cycle {
            body.push_str(&serde_json::to_string(rec).unwrap());
            body.push('\n');
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let path = write_temp(&dir, "cycle.jsonl", &body);
    assert_eq!(replay_file(&path).status.code(), Some(0));
}

#[test]
fn replay_detects_divergence_and_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    let header = r#"{"header":true,"n":2,"k":3,"strategy":"x","seed":0,"version":"0.1.0"}"#;

    let good = format!(
        "{header}\n{}\n",
        r#"{"step":0,"node":0,"before":[0,0,0],"after":[1,0,0]}"#
    );
    assert_eq!(
        replay_file(&write_temp(&dir, "good.jsonl", &good))
            .status
            .code(),
        Some(0)
    );

    let tampered = format!(
        "{header}\n{}\n",
        r#"{"step":0,"node":0,"before":[0,0,0],"after":[2,0,0]}"#
    );
    let o = replay_file(&write_temp(&dir, "tampered.jsonl", &tampered));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("divergence at step 0 (line 2)"));

    let unprivileged = format!(
        "{header}\n{}\n",
        r#"{"step":0,"node":1,"before":[0,0,0],"after":[0,0,0]}"#
    );
    assert_eq!(
        replay_file(&write_temp(&dir, "unpriv.jsonl", &unprivileged))
            .status
            .code(),
        Some(1)
    );

    let wrong_len = format!(
        "{header}\n{}\n",
        r#"{"step":0,"node":0,"before":[0,0],"after":[1,0]}"#
    );
    assert_eq!(
        replay_file(&write_temp(&dir, "len.jsonl", &wrong_len))
            .status
            .code(),
        Some(1)
    );

    let truncated = format!("{header}\n{}", r#"{"step":0,"node":0,"before":[0,0"#);
    let o = replay_file(&write_temp(&dir, "trunc.jsonl", &truncated));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"));

    let o = replay_file(&dir.path().join("missing.jsonl"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_formats_and_golden() {
    let o = run(&[
        "sweep",
        "--n-from",
        "2",
        "--n-to",
        "4",
        "--k-rule",
        "n",
        "--format",
        "json",
        "--no-timing",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("sweep_n2_4_kn.json"));

    let o = run(&[
        "sweep", "--n-from", "2", "--n-to", "3", "--k-rule", "n+1", "--format", "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.contains(",converges,")));

    let o = run(&[
        "sweep",
        "--n-from",
        "2",
        "--n-to",
        "2",
        "--k-rule",
        "list:1",
        "--format",
        "json",
        "--no-timing",
    ]);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["rows"][0]["verdict"], "converges");
    assert_eq!(doc["rows"][0]["worst_case_steps"], 0);
}

#[test]
fn sweep_below_n_diverges_without_failing() {
    let o = run(&[
        "sweep", "--n-from", "1", "--n-to", "4", "--k-rule", "n-1", "--format", "text",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("skipped"));
    assert!(text.contains("diverges"));
}

#[test]
fn prove_matches_golden_and_examples() {
    let o = run(&["prove", "--n", "2", "--k", "2", "--mode", "exhaustive"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), golden("prove_n2_k2_exhaustive.json"));

    let o = run(&["prove", "--n", "3", "--k", "3", "--mode", "exhaustive"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["total_violations"], 0);

    let o = run(&["prove", "--n", "3", "--k", "3", "--state-limit", "100"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn prove_below_threshold_makes_no_absent_value_claim() {
    let o = run(&[
        "prove", "--n", "3", "--k", "2", "--mode", "sampled", "--count", "20", "--depth", "100",
        "--format", "text",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("precondition k >= n > 1 not met"));
}

#[test]
fn simulate_writes_trace_file_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let o = run(&[
        "simulate",
        "--n",
        "4",
        "--k",
        "4",
        "--daemon",
        "adversarial",
        "--seed",
        "3",
        "--trace-out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    assert!(stderr(&o).contains("reached-legitimate"));
    assert_eq!(replay_file(&path).status.code(), Some(0));
}
