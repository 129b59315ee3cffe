use std::path::PathBuf;
use std::process::{Command, Output};

use fwdlab_core::arbiterize::arbiterize;
use fwdlab_core::dynamics::replay;
use fwdlab_core::json::{derivation_from_json, trace_from_json};
use fwdlab_core::logic_sync::{validate, SyncOptions};
use fwdlab_core::surface::{parse_global_type, parse_process};

fn data(name: &str) -> &'static str {
    let p = format!("{}/../core/tests/data/{}", env!("CARGO_MANIFEST_DIR"), name);
    Box::leak(p.into_boxed_str())
}

fn fwdlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fwdlab")).args(args).output().expect("binary runs")
}

fn path(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn check_two_buyer_arbiter() {
    let o = fwdlab(&["check", "--sync", data("p1.fwd"), "--ctx", data("p1.llp")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).trim_end().ends_with("1 s' (★ consumed)"));
}

#[test]
fn coherent_two_buyer() {
    let o = fwdlab(&["coherent", data("twobuyer.gt"), "--ctx", data("twobuyer_delta.llp")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn discussion_counterexample_is_rejected() {
    let o = fwdlab(&["check", "--sync", data("discussion_rejected.fwd"), "--ctx", data("discussion.llp")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("OrderViolation"), "{}", stderr(&o));
    let o = fwdlab(&["check", "--cll", data("discussion_rejected.fwd"), "--ctx", data("discussion.llp")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn parse_and_usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.fwd");
    std::fs::write(&bad, "x[").unwrap();
    let o = fwdlab(&["check", path(&bad), "--ctx", data("p1.llp")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.fwd:1:"), "{}", stderr(&o));
    assert_eq!(fwdlab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(fwdlab(&["check", data("p1.fwd")]).status.code(), Some(2));
    let missing = dir.path().join("missing.fwd");
    assert_eq!(fwdlab(&["check", path(&missing), "--ctx", data("p1.llp")]).status.code(), Some(2));
}

#[test]
fn incoherent_global_type_exits_1() {
    let o = fwdlab(&["coherent", data("twobuyer.gt"), "--ctx", data("p1.llp")]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn json_derivation_round_trips() {
    let o = fwdlab(&["check", "--sync", data("p1.fwd"), "--ctx", data("p1.llp"), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let d = derivation_from_json(&serde_json::from_str(&stdout(&o)).unwrap()).unwrap();
    validate(&d, SyncOptions::default()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("d.json");
    std::fs::write(&file, stdout(&o)).unwrap();
    let e = fwdlab(&["explain", path(&file)]);
    assert_eq!(e.status.code(), Some(0), "{}", stderr(&e));
    let direct = fwdlab(&["check", "--sync", data("p1.fwd"), "--ctx", data("p1.llp")]);
    assert_eq!(stdout(&e), stdout(&direct));

    for (args, name) in [
        (vec!["coherent", data("twobuyer.gt"), "--ctx", data("twobuyer_delta.llp"), "--json"], "g.json"),
        (vec!["check", "--cll", data("p1.fwd"), "--ctx", data("p1.llp"), "--json"], "c.json"),
    ] {
        let o = fwdlab(&args);
        assert_eq!(o.status.code(), Some(0));
        let file = dir.path().join(name);
        std::fs::write(&file, stdout(&o)).unwrap();
        assert_eq!(fwdlab(&["explain", path(&file)]).status.code(), Some(0));
    }
}

#[test]
fn tampered_derivation_is_rejected() {
    let o = fwdlab(&["check", "--sync", data("p1.fwd"), "--ctx", data("p1.llp"), "--json"]);
    let mut v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    v["premises"][0]["premises"] = serde_json::json!([]);
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("d.json");
    std::fs::write(&file, v.to_string()).unwrap();
    assert_eq!(fwdlab(&["explain", path(&file)]).status.code(), Some(1));
}

#[test]
fn arbiterize_then_globalize() {
    let dir = tempfile::tempdir().unwrap();
    let fwd = dir.path().join("arb.fwd");
    let o = fwdlab(&["arbiterize", data("twobuyer.gt"), "--ctx", data("twobuyer_delta.llp"), "-o", path(&fwd)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let g = parse_global_type(&std::fs::read_to_string(data("twobuyer.gt")).unwrap()).unwrap();
    let written = parse_process(&std::fs::read_to_string(&fwd).unwrap()).unwrap();
    assert!(written.alpha_eq(&arbiterize(&g)));

    let gt = dir.path().join("back.gt");
    let o = fwdlab(&["globalize", path(&fwd), "--ctx", data("p1.llp"), "-o", path(&gt)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    parse_global_type(&std::fs::read_to_string(&gt).unwrap()).unwrap();
}

#[test]
fn compose_two_buyer_and_replay_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("final.fwd");
    let args = [
        "compose",
        data("p1.fwd"),
        "b2'",
        data("p2.fwd"),
        "b2''",
        "--ctx",
        data("p1.llp"),
        "--ctx",
        data("p2.llp"),
        "--json",
        "-o",
        path(&out),
    ];
    let o = fwdlab(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let trace = trace_from_json(&serde_json::from_str(&stdout(&o)).unwrap()).unwrap();
    assert!(trace.steps.len() < 200);
    let result = replay(&trace).unwrap();
    let written = parse_process(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(written.alpha_eq(&result));

    let check = fwdlab(&["check", path(&out), "--ctx", data("composed.llp")]);
    assert_eq!(check.status.code(), Some(0), "{}", stderr(&check));

    let tfile = dir.path().join("trace.json");
    std::fs::write(&tfile, stdout(&o)).unwrap();
    assert_eq!(fwdlab(&["explain", path(&tfile)]).status.code(), Some(0));
}

#[test]
fn normalize_prints_trace_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cut = dir.path().join("cut.fwd");
    let o = fwdlab(&[
        "compose", data("p1.fwd"), "b2'", data("p2.fwd"), "b2''",
        "--ctx", data("p1.llp"), "--ctx", data("p2.llp"), "--no-run", "-o", path(&cut),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = fwdlab(&["normalize", path(&cut), "--ctx", data("composed.llp"), "--trace"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().starts_with("k0 "));
    assert!(text.lines().any(|l| l.contains(" half-free @ ")));
    let full = fwdlab(&["normalize", path(&cut), "--trace=full"]);
    assert!(stdout(&full).contains("  before: "));
    let limited = fwdlab(&["normalize", path(&cut), "--max-steps", "3"]);
    assert_eq!(limited.status.code(), Some(1));
    assert!(stderr(&limited).contains("StepLimitExceeded"));
}

#[test]
fn untyped_compose_with_a_type() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.fwd");
    let q = dir.path().join("q.fwd");
    std::fs::write(&p, "x[]").unwrap();
    std::fs::write(&q, "y(). z[]").unwrap();
    let o = fwdlab(&["compose", path(&p), "x", path(&q), "y", "--type", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "z[]");
}

#[test]
fn fuzz_is_deterministic() {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_fwdlab"))
            .args(["fuzz", "--count", "20", "--size", "5"])
            .env("FWDLAB_SEED", "42")
            .output()
            .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&b));
}
