use std::fs;
use std::process::{Command, Output};

use rmrepair::repair::TranscriptJson;

fn rmrepair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmrepair"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn field_report() {
    let out = rmrepair(&[
        "field", "--p", "2", "--a", "1", "--t", "2", "--format", "json",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(
        report["trace"],
        serde_json::json!([[0, 0], [1, 0], [2, 1], [3, 1]])
    );

    let out = rmrepair(&["field", "--p", "3", "--t", "3", "--format", "json"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["kernel_basis"].as_array().unwrap().len(), 2);

    let out = rmrepair(&["field", "--t", "1", "--pretty"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("1 -> 1"));
}

#[test]
fn repair_writes_transcript_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("transcript.json");
    let out = rmrepair(&["repair", "--failures", "6", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("bandwidth=18 paper=18 naive=26\n"));
    let transcript: TranscriptJson =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(transcript.erased, vec![6]);
    assert_eq!(transcript.bandwidth_subsymbols, 18);
    let cost: u64 = transcript
        .queries
        .iter()
        .map(|q| if q.multiplier.is_some() { 1 } else { 2 })
        .sum();
    assert_eq!(cost, 18);
}

#[test]
fn identical_runs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = rmrepair(&[
            "repair",
            "--p",
            "3",
            "--t",
            "3",
            "--m",
            "1",
            "--d",
            "10",
            "--seed",
            "5",
            "--failures",
            "9,10,11",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        assert!(stdout(&out).starts_with("bandwidth=72 paper=60 naive=33 exceeds_paper_bound\n"));
        fs::read(path).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn precondition_failures_exit_with_two() {
    let out = rmrepair(&["repair", "--failures", "0,8"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("axis 1: points 0 and 8 differ by 2"), "{err}");

    let out = rmrepair(&["repair", "--failures", "0,1,2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("exceed t = 2"));

    let out = rmrepair(&["repair", "--failures", "99"]);
    assert_eq!(out.status.code(), Some(2));
    let out = rmrepair(&["repair", "--p", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_defaults_and_gate() {
    let out = rmrepair(&["verify"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(!stdout(&out).contains("FAIL"));

    let out = rmrepair(&["verify", "--m", "1", "--d", "3", "--format", "json"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"repair: degree gate refuses"));
}

#[test]
fn bench_csv_rows() {
    let out = rmrepair(&["bench", "--format", "csv"]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "l,measured,paper_bound,naive\n1,18,18,26\n2,28,32,26\n"
    );

    let out = rmrepair(&["bench", "--p", "3", "--t", "3", "--m", "1", "--d", "10"]);
    let table = stdout(&out);
    let last = table
        .lines()
        .find(|l| l.trim_start().starts_with('3'))
        .unwrap();
    assert!(last.contains("72") && last.contains("60") && last.contains("exceeds"));

    let out = rmrepair(&[
        "bench", "--t", "3", "--m", "1", "--d", "3", "--format", "json",
    ]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["rows"][0]["measured"], 7);
    assert_eq!(report["rows"][0]["paper_bound"], 7);
}

#[test]
fn encode_and_repair_from_state() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.json");
    let out = rmrepair(&["encode", "--seed", "3", "--out", state.to_str().unwrap()]);
    assert!(out.status.success());
    let mut saved: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&state).unwrap()).unwrap();
    let original = saved["values"][5].clone();
    saved["values"][5] = serde_json::Value::Null;
    fs::write(&state, saved.to_string()).unwrap();

    let out = rmrepair(&[
        "repair",
        "--state",
        state.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let transcript: TranscriptJson = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(transcript.recovered[0].node, 5);
    assert_eq!(serde_json::json!(transcript.recovered[0].symbol), original);
}

#[test]
fn scenario_command() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("scenario.json");
    fs::write(
        &file,
        r#"{"params":{"p":2,"a":1,"t":2,"m":2,"d":4},"seed":1,"failures":[[3],[0,4]]}"#,
    )
    .unwrap();
    let out = rmrepair(&["scenario", file.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("step 2 failed=[0, 4] bandwidth=28 paper=32"));

    fs::write(
        &file,
        r#"{"params":{"p":2,"a":1,"t":2,"m":2,"d":4},"seed":1,"failures":[[0,8]]}"#,
    )
    .unwrap();
    let out = rmrepair(&["scenario", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("refused"));
}
