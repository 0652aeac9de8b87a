use std::fs;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::io::Write;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hypermatch"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn run_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = bin().args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

const T0: &str = r#"{"players":["p1","p2"],"resources":["r1","r2"],
  "configs":[{"player":"p1","resources":["r1"]},{"player":"p2","resources":["r2"]}]}"#;
const T0_SOLUTION: &str = r#"{"entries":[{"player":"p1","config":0,"kept":["r1"]},{"player":"p2","config":1,"kept":["r2"]}]}"#;
const T1: &str = r#"{"players":["p1","p2"],"resources":["r1","r2","r3","r4"],
  "configs":[{"player":"p1","resources":["r1","r2"]},{"player":"p1","resources":["r3","r4"]},
             {"player":"p2","resources":["r1","r3"]},{"player":"p2","resources":["r2","r4"]}]}"#;

#[test]
fn counterexample_piped_into_solve() {
    let gen = run(&["generate", "counterexample", "--k", "2"]);
    assert!(gen.status.success());
    let solved = run_stdin(&["solve", "--ell", "4", "--seed", "1"], &gen.stdout);
    assert_eq!(solved.status.code(), Some(0), "{}", String::from_utf8_lossy(&solved.stderr));

    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("ce.json"), &gen.stdout).unwrap();
    fs::write(dir.path().join("sol.json"), &solved.stdout).unwrap();
    let ok = run(&["verify", "--input", &path(dir.path(), "ce.json"), "--solution", &path(dir.path(), "sol.json"), "--alpha", "2"]);
    assert_eq!(ok.status.code(), Some(0));
    let below = run(&["verify", "--input", &path(dir.path(), "ce.json"), "--solution", &path(dir.path(), "sol.json"), "--alpha", "3/2"]);
    assert_eq!(below.status.code(), Some(2));
}

#[test]
fn verify_t0_alpha_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t0.json"), T0).unwrap();
    fs::write(dir.path().join("x.json"), T0_SOLUTION).unwrap();
    let out = run(&["verify", "--input", &path(dir.path(), "t0.json"), "--solution", &path(dir.path(), "x.json"), "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"accepted\": true"));
}

#[test]
fn oracle_t1_prints_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t1.json"), T1).unwrap();
    let out = run(&["oracle", "--input", &path(dir.path(), "t1.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "2");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(run(&["solve", "--seed", "notanumber"]).status.code(), Some(64));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    // two players sharing their only resource
    let clash = r#"{"players":["a","b"],"resources":["r"],
      "configs":[{"player":"a","resources":["r"]},{"player":"b","resources":["r"]}]}"#;
    assert_eq!(run_stdin(&["solve"], clash.as_bytes()).status.code(), Some(2));
    assert_eq!(run_stdin(&["solve"], b"not json").status.code(), Some(1));
    assert_eq!(run(&["oracle", "--input", "/nonexistent/file.json"]).status.code(), Some(1));
}

#[test]
fn reduction_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t1.json"), T1).unwrap();
    let to_santa = run(&["reduce", "to-santa", "--input", &path(dir.path(), "t1.json"), "--trace-out", &path(dir.path(), "trace.json")]);
    assert!(to_santa.status.success());
    fs::write(dir.path().join("santa.json"), &to_santa.stdout).unwrap();
    // the alpha = 2 allocation: p:p1:0 keeps r1, p:p2:3 keeps r4, the other
    // configuration players take the auxiliary resources
    let alloc = r#"{"assignments":[{"resource":"r:r1","player":"p:p1:0"},{"resource":"r:r4","player":"p:p2:3"},
      {"resource":"a:p1:1","player":"p:p1:1"},{"resource":"a:p2:1","player":"p:p2:2"}]}"#;
    fs::write(dir.path().join("alloc.json"), alloc).unwrap();
    let back = run(&["pullback", "--trace", &path(dir.path(), "trace.json"), "--solution", &path(dir.path(), "alloc.json"), "--out", &path(dir.path(), "sol.json")]);
    assert!(back.status.success(), "{}", String::from_utf8_lossy(&back.stderr));
    let ok = run(&["verify", "--input", &path(dir.path(), "t1.json"), "--solution", &path(dir.path(), "sol.json"), "--alpha", "2"]);
    assert_eq!(ok.status.code(), Some(0));

    let to_csc = run(&["reduce", "to-csc", "--input", &path(dir.path(), "santa.json"), "--opt-guess", "1/2", "--trace-out", &path(dir.path(), "trace2.json"), "--out", &path(dir.path(), "csc.json")]);
    assert!(to_csc.status.success(), "{}", String::from_utf8_lossy(&to_csc.stderr));
    let solved = run(&["solve", "--input", &path(dir.path(), "csc.json"), "--seed", "3", "--out", &path(dir.path(), "csol.json")]);
    assert!(solved.status.success());
    let pulled = run(&["pullback", "--trace", &path(dir.path(), "trace2.json"), "--solution", &path(dir.path(), "csol.json")]);
    assert!(pulled.status.success());
    let text = String::from_utf8_lossy(&pulled.stdout);
    assert!(text.contains("\"meets_guarantee\": true"), "{text}");
}

#[test]
fn bench_csv_header() {
    let out = run(&["bench", "--suite", "counterexamples"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "instance,m,n,ell,d,gamma,alpha_achieved,alpha_oracle,rounds,certified,seconds");
    assert_eq!(lines.count(), 5);
    assert_eq!(run(&["bench", "--suite", "nope"]).status.code(), Some(1));
}

/// Reruns with identical seeds write byte-identical artifacts.
#[test]
fn determinism() {
    let dir = tempfile::tempdir().unwrap();
    let inst = path(dir.path(), "r.json");
    assert!(run(&["generate", "regular", "--players", "6", "--degree", "3", "--sizes", "2..9", "--seed", "5", "--out", &inst]).status.success());
    let twice = |args: &[&str]| {
        let a = run(args);
        let b = run(args);
        assert!(a.status.success(), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        a.stdout
    };
    twice(&["generate", "regular", "--players", "6", "--degree", "3", "--sizes", "2..9", "--seed", "5"]);
    twice(&["preprocess", "--input", &inst, "--ell", "2", "--seed", "9"]);
    let hier = twice(&["hierarchy", "--input", &inst, "--ell", "3", "--seed", "9", "--retries", "5"]);
    fs::write(dir.path().join("h.json"), hier).unwrap();
    twice(&["select", "--input", &inst, "--hierarchy", &path(dir.path(), "h.json"), "--seed", "4", "--max-rounds", "60"]);
    twice(&["solve", "--input", &inst, "--ell", "3", "--seed", "9"]);
    twice(&["solve", "--input", &inst, "--seed", "9", "--gamma", "2"]);
    twice(&["reduce", "to-santa", "--input", &inst]);

    let r1 = path(dir.path(), "rep1.json");
    let r2 = path(dir.path(), "rep2.json");
    assert!(run(&["solve", "--input", &inst, "--seed", "1", "--report", &r1, "--out", &path(dir.path(), "a")]).status.success());
    assert!(run(&["solve", "--input", &inst, "--seed", "1", "--report", &r2, "--out", &path(dir.path(), "b")]).status.success());
    assert_eq!(fs::read(&r1).unwrap(), fs::read(&r2).unwrap());
    println!("PASS criterion 9: CLI reruns with identical seeds are byte-identical");
}
