//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints its own PASS/FAIL line; exits non-zero if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use viable::contract::{load_contract, TypedContract};
use viable::corpus::{check_seed, verdict_sequences};
use viable::engine::{check_realizability, confirm_stuck, write_depth_scripts, CheckResult, EngineOptions, StuckCheck};
use viable::eval::{replay_trace, ReplayVerdict, Valuation, Value};
use viable::oracle::{properties, random_contract, DomainSpec, GeneratorParams, Oracle};

const CORPUS_SEEDS: u64 = 300;
const SEQUENCE_SEEDS: u64 = 50;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn fixture(name: &str) -> (String, TypedContract) {
    let path = root().join("../../fixtures").join(format!("{name}.ctr"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let contract = load_contract(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    (text, contract)
}

fn options() -> EngineOptions {
    EngineOptions::default()
}

/// Runs the engine and insists on a confirmed, replaying, stuck trace.
fn unrealizable_at_zero(contract: &TypedContract, opts: &EngineOptions) -> viable::eval::Trace {
    let started = Instant::now();
    let report = check_realizability(contract, opts).expect("engine run");
    assert!(started.elapsed() < Duration::from_secs(5), "took {:?}", started.elapsed());
    let CheckResult::Unrealizable { n: 0, trace, spurious_possible: true, no_initial_state: false, .. } = report.result
    else {
        panic!("expected unrealizable at depth 0, got {:?}", report.result)
    };
    assert_eq!(replay_trace(contract, &trace), Ok(ReplayVerdict::NeedsSuccessorCheck));
    assert_eq!(confirm_stuck(contract, &trace, &opts.solver, opts.per_check_timeout).unwrap(), StuckCheck::Stuck);
    trace
}

fn example_one() {
    let (text, c) = fixture("ex1");
    let trace = unrealizable_at_zero(&c, &options());
    assert_eq!(trace.initial, Valuation::new().with("s", Value::int(0)));
    let dom = DomainSpec::from_source(&text).unwrap().unwrap();
    assert_eq!(dom, DomainSpec::new().int("s", -2, 2).int("i", 0, 0));
    assert!(Oracle::new(&c, &dom).unwrap().realizable(), "oracle should find example one realizable");
}

fn example_two() {
    let (text, c) = fixture("ex2");
    unrealizable_at_zero(&c, &options());
    let dom = DomainSpec::from_source(&text).unwrap().unwrap();
    assert_eq!(dom, DomainSpec::new().int("s", -1, 3).int("i", 0, 0));
    let o = Oracle::new(&c, &dom).unwrap();
    assert!(!o.realizable());
    assert!(o.viable_states().is_empty());
    let wide = Oracle::new(&c, &DomainSpec::new().int("s", 0, 5).int("i", 0, 0)).unwrap();
    for n in 0..=4 {
        assert!(wide.base_check(n), "base check at {n}");
    }
    assert!(!wide.base_check_simplified(0));
}

fn case_studies() {
    let opts = options();
    for (name, expected) in [("osas", None), ("counter", Some(1)), ("trivial", Some(0))] {
        let (_, c) = fixture(name);
        let started = Instant::now();
        let report = check_realizability(&c, &opts).expect("engine run");
        let elapsed = started.elapsed();
        assert!(elapsed < Duration::from_secs(5), "{name} took {elapsed:?}");
        match (expected, &report.result) {
            (Some(n), CheckResult::Realizable { n: got }) => assert_eq!(*got, n, "{name}"),
            (None, CheckResult::Unrealizable { trace, .. }) => {
                let stuck = trace.stuck_input.as_ref().expect("stuck input");
                assert_eq!(stuck.get("ccdl_failed"), Some(&Value::Bool(true)));
                assert_eq!(stuck.get("osas_failed"), Some(&Value::Bool(true)));
            }
            (_, other) => panic!("{name}: unexpected {other:?}"),
        }
    }
}

fn property_suite() {
    let started = Instant::now();
    let params = GeneratorParams::default();
    let mut realizable = 0;
    for seed in 0..CORPUS_SEEDS {
        let (c, dom) = random_contract(seed, &params);
        let o = Oracle::new(&c, &dom).unwrap();
        let violations = properties::check_all(&o);
        assert!(violations.is_empty(), "seed {seed}: {violations:?}");
        realizable += o.realizable() as usize;
    }
    println!(
        "    {CORPUS_SEEDS} contracts ({realizable} realizable), no violations, {:.1}s",
        started.elapsed().as_secs_f64()
    );
    assert!(started.elapsed() < Duration::from_secs(600));
}

fn differential() {
    let params = GeneratorParams::default();
    let opts = EngineOptions { per_check_timeout: Duration::from_secs(5), max_depth: 5, ..options() };
    let (mut unknown, mut realizable, mut unrealizable) = (0, 0, 0);
    for seed in 0..CORPUS_SEEDS {
        let outcome = check_seed(seed, &params, &opts).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert!(outcome.violation.is_none(), "{outcome}");
        match outcome.result.expect("result present when there is no violation") {
            CheckResult::Realizable { .. } => {
                assert!(outcome.oracle_realizable, "seed {seed}");
                realizable += 1;
            }
            CheckResult::Unrealizable { trace, no_initial_state, .. } => {
                if !no_initial_state {
                    let (c, _) = random_contract(seed, &params);
                    assert_eq!(replay_trace(&c, &trace), Ok(ReplayVerdict::NeedsSuccessorCheck), "seed {seed}");
                    assert_eq!(
                        confirm_stuck(&c, &trace, &opts.solver, opts.per_check_timeout).unwrap(),
                        StuckCheck::Stuck,
                        "seed {seed}"
                    );
                }
                unrealizable += 1;
            }
            CheckResult::Unknown { .. } => unknown += 1,
        }
    }
    println!("    {realizable} realizable, {unrealizable} unrealizable, {unknown} unknown, no violations");
}

fn incremental_matches_fresh() {
    let params = GeneratorParams::default();
    let solver = options().solver;
    let timeout = Duration::from_secs(5);
    for seed in 0..SEQUENCE_SEEDS {
        let (c, _) = random_contract(seed, &params);
        let inc = verdict_sequences(&c, 3, &solver, timeout, true).unwrap();
        let fresh = verdict_sequences(&c, 3, &solver, timeout, false).unwrap();
        assert_eq!(inc, fresh, "seed {seed}");
    }
}

fn golden_scripts() {
    let golden = root().join("tests/golden");
    for name in ["ex1", "ex2", "counter", "osas"] {
        let (_, c) = fixture(name);
        for n in 0..=2 {
            let first = tempfile::tempdir().unwrap();
            let second = tempfile::tempdir().unwrap();
            let paths = write_depth_scripts(&c, n, false, first.path()).unwrap();
            write_depth_scripts(&c, n, false, second.path()).unwrap();
            assert_eq!(paths.len(), 2);
            for p in paths {
                let file = p.file_name().unwrap();
                let got = std::fs::read(&p).unwrap();
                assert_eq!(got, std::fs::read(second.path().join(file)).unwrap(), "{name} {file:?} not deterministic");
                let want = std::fs::read(golden.join(name).join(file))
                    .unwrap_or_else(|e| panic!("{name}/{}: {e}", file.to_string_lossy()));
                assert!(got == want, "{name}/{} differs from golden", file.to_string_lossy());
            }
        }
    }
}

fn main() {
    let criteria: [(&str, fn()); 7] = [
        ("example one: spurious counterexample vs realizable oracle", example_one),
        ("example two: unrealizable, base check holds at every depth", example_two),
        ("case studies: osas, counter, trivial", case_studies),
        ("oracle property suite on the random corpus", property_suite),
        ("engine/oracle differential soundness", differential),
        ("incremental verdicts equal fresh-solver verdicts", incremental_matches_fresh),
        ("golden SMT scripts", golden_scripts),
    ];
    panic::set_hook(Box::new(|info| println!("    {info}")));
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let ok = panic::catch_unwind(AssertUnwindSafe(run)).is_ok();
        failed += !ok as usize;
        println!(
            "criterion {}: {} - {name} ({:.2}s)",
            k + 1,
            if ok { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
