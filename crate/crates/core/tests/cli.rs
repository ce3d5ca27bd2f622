use std::path::PathBuf;

use serde_json::Value as Json;
use viable::cli::{run, EXIT_ERROR, EXIT_REALIZABLE, EXIT_UNREALIZABLE};
use viable::contract::load_contract;
use viable::eval::{replay_trace, ReplayVerdict, Trace};
use viable::oracle::{DomainSpec, Oracle};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(format!("{name}.ctr"))
        .to_string_lossy()
        .into_owned()
}

fn viable(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("viable").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Fixture name, expected verdict, expected depth.
const FIXTURES: &[(&str, &str, usize)] = &[
    ("ex1", "unrealizable", 0),
    ("ex2", "unrealizable", 0),
    ("counter", "realizable", 1),
    ("trivial", "realizable", 0),
    ("osas", "unrealizable", 0),
    ("osas_fixed", "realizable", 0),
    ("microwave_quiescent", "unrealizable", 0),
    ("microwave_keypad", "unrealizable", 0),
    ("microwave_keypad_fixed", "realizable", 0),
    ("gpca_im", "unrealizable", 0),
    ("gpca_im_fixed", "realizable", 0),
];

#[test]
fn fixtures_classify_with_matching_exit_codes() {
    for &(name, verdict, n) in FIXTURES {
        let (code, out, err) = viable(&["check", &fixture(name), "--format", "json"]);
        let j: Json = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{name}: {e}: {out}{err}"));
        assert_eq!(j["result"], verdict, "{name}");
        assert_eq!(j["n"], n, "{name}");
        let want = if verdict == "realizable" { EXIT_REALIZABLE } else { EXIT_UNREALIZABLE };
        assert_eq!(code, want, "{name}");
    }
}

#[test]
fn json_trace_round_trips_and_replays() {
    for &(name, verdict, _) in FIXTURES {
        if verdict != "unrealizable" {
            continue;
        }
        let (_, out, _) = viable(&["check", &fixture(name), "--format", "json"]);
        let j: Json = serde_json::from_str(&out).unwrap();
        assert_eq!(j["spurious_possible"], true);
        let trace = Trace::from_json(&j["trace"].to_string()).unwrap();
        let c = load_contract(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap();
        assert_eq!(replay_trace(&c, &trace), Ok(ReplayVerdict::NeedsSuccessorCheck), "{name}");
    }
}

#[test]
fn osas_json_names_both_failures() {
    let (code, out, _) = viable(&["check", &fixture("osas"), "--format", "json"]);
    assert_eq!(code, EXIT_UNREALIZABLE);
    let j: Json = serde_json::from_str(&out).unwrap();
    assert_eq!(j["trace"]["stuck_input"]["ccdl_failed"], true);
    assert_eq!(j["trace"]["stuck_input"]["osas_failed"], true);
}

#[test]
fn text_report() {
    let (code, out, _) = viable(&["check", &fixture("counter")]);
    assert_eq!(code, EXIT_REALIZABLE);
    assert!(out.starts_with("REALIZABLE (n=1)\n"), "{out}");
    assert!(out.contains("base check reached depth: 1"));

    let (code, out, _) = viable(&["check", &fixture("osas"), "--no-parallel"]);
    assert_eq!(code, EXIT_UNREALIZABLE);
    assert!(out.starts_with("UNREALIZABLE (n=0)\n"), "{out}");
    let stuck = out.lines().find(|l| l.trim_start().starts_with(">> stuck")).expect("stuck row");
    assert!(stuck.contains("true"), "{stuck}");
    assert!(out.contains("spurious"));
}

#[test]
fn max_depth_zero_still_finds_depth_zero_counterexample() {
    let (code, out, _) = viable(&["check", &fixture("ex2"), "--max-depth", "0"]);
    assert_eq!(code, EXIT_UNREALIZABLE);
    assert!(out.starts_with("UNREALIZABLE (n=0)"));
}

#[test]
fn tool_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ctr");
    std::fs::write(&bad, "state x: int; trans x' = ;").unwrap();
    let ill_typed = dir.path().join("ill.ctr");
    std::fs::write(&ill_typed, "state x: int; init x;").unwrap();
    let missing = dir.path().join("missing.ctr");
    for args in [
        vec!["check", bad.to_str().unwrap()],
        vec!["check", ill_typed.to_str().unwrap()],
        vec!["check", missing.to_str().unwrap()],
        vec!["check", &fixture("ex1"), "--solver", "/nonexistent/solver"],
        vec!["check", &fixture("ex1"), "--timeout", "0"],
        vec!["oracle", &fixture("osas")],
        vec!["check"],
        vec!["frobnicate"],
        vec!["corpus", "--seeds", "5..2"],
    ] {
        let (code, out, err) = viable(&args);
        assert_eq!(code, EXIT_ERROR, "{args:?}: {out}");
        assert!(!err.is_empty(), "{args:?}");
    }
}

#[test]
fn oracle_subcommand() {
    let (code, out, _) = viable(&["oracle", &fixture("ex1")]);
    assert_eq!(code, EXIT_REALIZABLE);
    assert_eq!(out, "REALIZABLE\nviable states: 4 of 5\n");
    let (code, out, _) = viable(&["oracle", &fixture("ex2"), "--format", "json"]);
    assert_eq!(code, EXIT_UNREALIZABLE);
    let j: Json = serde_json::from_str(&out).unwrap();
    assert_eq!(j["viable_states"], 0);
}

#[test]
fn annotated_fixtures_agree_with_oracle_where_the_engine_is_exact() {
    for &(name, verdict, _) in FIXTURES {
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        let Some(dom) = DomainSpec::from_source(&text).unwrap() else { continue };
        let c = load_contract(&text).unwrap();
        let o = Oracle::new(&c, &dom).unwrap();
        // A realizable verdict is always exact; ex1 is the known spurious case.
        if verdict == "realizable" {
            assert!(o.realizable(), "{name}");
        } else if name != "ex1" {
            assert!(!o.realizable(), "{name}");
        }
    }
}

#[test]
fn dump_smt_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let (code, out, _) = viable(&["dump-smt", &fixture("counter"), "-n", "2", "-o", dir.path().to_str().unwrap()]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 2);
    }
    for f in ["base_2.smt2", "extend_2.smt2"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn check_writes_issued_queries_when_asked() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = viable(&["check", &fixture("counter"), "--dump-smt", dir.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_REALIZABLE);
    assert!(std::fs::read_dir(dir.path()).unwrap().count() >= 2);
}

#[test]
fn corpus_subcommand_reports_no_violations() {
    let (code, out, _) = viable(&["corpus", "--seeds", "0..8", "--check-timeout", "5", "--max-depth", "5"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.ends_with("8 contracts, 0 violations, 0 unknown\n"), "{out}");
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = viable(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("check"));
}
