use std::path::Path;
use std::process::{Command, Output};

use pclass_core::decompose::Decomposition;
use pclass_core::synth::Sidecar;

fn pclass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pclass")).args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn synth_then_decompose_matches_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let datum = dir.path().join("d.json");
    let dec = dir.path().join("dec.json");
    let o = pclass(&["synth", "--p", "3", "--n", "2", "--m", "0", "--e", "2,1,1", "--seed", "9", "--out", path_str(&datum)]);
    assert!(o.status.success());
    let o = pclass(&["decompose", "--in", path_str(&datum), "--out", path_str(&dec)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("blocks     {9,3,2,1}"), "{}", stdout(&o));

    let sidecar: Sidecar = serde_json::from_str(&std::fs::read_to_string(dir.path().join("d.sidecar.json")).unwrap()).unwrap();
    let got = Decomposition::from_json(&std::fs::read_to_string(&dec).unwrap()).unwrap();
    assert_eq!(got.m, sidecar.expected.m);
    assert_eq!(got.y_ranks(2), sidecar.expected.y_ranks);
    assert_eq!(sidecar.expected.y_ranks, vec![1, 1, 1]);

    let o = pclass(&["verify", "--in", path_str(&datum), "--dec", path_str(&dec)]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn mutated_decomposition_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let datum = dir.path().join("d.json");
    let dec = dir.path().join("dec.json");
    assert!(pclass(&["synth", "--p", "3", "--n", "1", "--m", "0", "--e", "1,2", "--out", path_str(&datum)]).status.success());
    assert!(pclass(&["decompose", "--in", path_str(&datum), "--out", path_str(&dec), "--format", "json"]).status.success());

    let mut value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&dec).unwrap()).unwrap();
    value["m"] = serde_json::json!("-inf");
    std::fs::write(&dec, value.to_string()).unwrap();
    let o = pclass(&["verify", "--in", path_str(&datum), "--dec", path_str(&dec)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL T2."), "{}", stdout(&o));
}

#[test]
fn local_cyclotomic_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let datum = dir.path().join("l.json");
    assert!(pclass(&["local", "--p", "3", "--kind", "cyclotomic", "--n", "1", "--out", path_str(&datum)]).status.success());
    let o = pclass(&["decompose", "--in", path_str(&datum)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    // m = −∞ here, so dim X = 3^m + 1 = 1.
    assert!(text.contains("m          -inf") && text.contains("dim X      1"), "{text}");
    assert!(pclass(&["invariants", "--in", path_str(&datum)]).status.success());
}

#[test]
fn invalid_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"p": 3, "n": 1}"#).unwrap();
    let o = pclass(&["decompose", "--in", path_str(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing field"));

    assert_eq!(pclass(&["synth", "--p", "3", "--n", "2", "--m", "4", "--e", "1,1,1"]).status.code(), Some(2));
    assert_eq!(pclass(&["local", "--p", "2", "--kind", "unramified", "--n", "1"]).status.code(), Some(2));
    assert_eq!(pclass(&["synth", "--p", "4", "--n", "1"]).status.code(), Some(2));
}

#[test]
fn jordan_of_raw_sigma() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("s.json");
    std::fs::write(&raw, r#"{"p":3,"n":1,"sigma":[[1,1,0,0],[0,1,1,0],[0,0,1,0],[0,0,0,1]]}"#).unwrap();
    let o = pclass(&["jordan", "--in", path_str(&raw)]);
    assert_eq!(stdout(&o).trim(), "{3,1}");
}

#[test]
fn output_is_deterministic() {
    let run = || stdout(&pclass(&["synth", "--p", "5", "--n", "1", "--seed", "17"]));
    let first = run();
    assert!(!first.is_empty());
    assert_eq!(first, run());
    let dir = tempfile::tempdir().unwrap();
    let datum = dir.path().join("d.json");
    std::fs::write(&datum, &first).unwrap();
    let a = stdout(&pclass(&["invariants", "--in", path_str(&datum), "--format", "json", "--seed", "3"]));
    let b = stdout(&pclass(&["invariants", "--in", path_str(&datum), "--format", "json", "--jobs", "1", "--seed", "3"]));
    assert_eq!(a, b);
}
