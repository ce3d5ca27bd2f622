//! The realizability loop: base and extend checks per depth, counterexample
//! extraction and validation.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use crate::contract::{TypedContract, VarKind};
use crate::error::{EngineError, SolverError};
use crate::eval::{replay_trace, ReplayVerdict, Trace, TraceStep, Valuation};
use crate::smtlib::{check_monolithic, depth_query, emit_script, Assignment, Session, SolverCommand, SolverVerdict};
use crate::unroll::{
    build_base_negation, build_extend_negation, build_initial_sat, build_successor_query, QueryFormula, StepVar,
};

#[derive(Clone, Debug)]
pub struct EngineOptions {
    pub max_depth: usize,
    pub overall_timeout: Duration,
    pub per_check_timeout: Duration,
    pub parallel: bool,
    pub validate_counterexamples: bool,
    /// Drop literal-`true` conjuncts before rendering.
    pub simplify: bool,
    pub solver: SolverCommand,
    /// Write every query the engine issues to this directory.
    pub dump_dir: Option<PathBuf>,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            max_depth: 200,
            overall_timeout: Duration::from_secs(1000),
            per_check_timeout: Duration::from_secs(20),
            parallel: true,
            validate_counterexamples: true,
            simplify: false,
            solver: SolverCommand::from_env(),
            dump_dir: None,
        }
    }
}

impl EngineOptions {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.overall_timeout.is_zero() {
            return Err(EngineError::Options("overall timeout must be positive".into()));
        }
        if self.per_check_timeout.is_zero() {
            return Err(EngineError::Options("per-check timeout must be positive".into()));
        }
        Ok(())
    }
}

/// How far an unrealizable verdict's counterexample was checked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Validation {
    /// Replayed, and the solver showed the last state has no successor.
    Confirmed,
    /// Replayed, but the successor query came back unknown.
    Unconfirmed(String),
    /// Validation was switched off.
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnknownReason {
    SolverUnknown(String),
    Timeout,
    MaxDepth,
}

impl fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnknownReason::SolverUnknown(r) => write!(f, "solver returned unknown ({r})"),
            UnknownReason::Timeout => f.write_str("timeout"),
            UnknownReason::MaxDepth => f.write_str("maximum depth reached"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckResult {
    Realizable {
        n: usize,
    },
    Unrealizable {
        n: usize,
        trace: Trace,
        /// Always true: the simplified base check can reject realizable contracts.
        spurious_possible: bool,
        /// The initial guarantee is unsatisfiable; the trace is empty.
        no_initial_state: bool,
        validation: Validation,
    },
    Unknown {
        base_depth_reached: Option<usize>,
        reason: UnknownReason,
    },
}

impl CheckResult {
    pub fn kind(&self) -> &'static str {
        match self {
            CheckResult::Realizable { .. } => "realizable",
            CheckResult::Unrealizable { .. } => "unrealizable",
            CheckResult::Unknown { .. } => "unknown",
        }
    }

    pub fn depth(&self) -> Option<usize> {
        match self {
            CheckResult::Realizable { n } | CheckResult::Unrealizable { n, .. } => Some(*n),
            CheckResult::Unknown { .. } => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub result: CheckResult,
    pub elapsed: Duration,
    /// Largest depth at which the base check was shown to hold.
    pub base_depth_reached: Option<usize>,
}

/// Rebuilds the run described by a model of the depth-`n` base negation.
pub fn extract_counterexample(assignment: &Assignment, n: usize, contract: &TypedContract) -> Trace {
    let at = |kind: VarKind, k: usize| -> Valuation {
        contract
            .decls()
            .iter()
            .filter(|d| d.kind == kind)
            .filter_map(|d| assignment.get(&StepVar::at(d.name.clone(), k)).map(|v| (d.name.clone(), v.clone())))
            .collect()
    };
    Trace {
        initial: at(VarKind::State, 0),
        steps: (1..=n)
            .map(|k| TraceStep { input: at(VarKind::Input, k), next: at(VarKind::State, k) })
            .collect(),
        stuck_input: Some(at(VarKind::Input, n + 1)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StuckCheck {
    /// No successor exists.
    Stuck,
    /// The solver found a successor; the trace is not a counterexample.
    HasSuccessor,
    Undetermined(String),
}

/// Asks a fresh solver whether the trace's last state has any successor for
/// its stuck input.
pub fn confirm_stuck(
    contract: &TypedContract,
    trace: &Trace,
    solver: &SolverCommand,
    check_timeout: Duration,
) -> Result<StuckCheck, SolverError> {
    let input = trace
        .stuck_input
        .as_ref()
        .ok_or_else(|| SolverError::Protocol("trace has no stuck input".into()))?;
    let q = build_successor_query(contract, trace.last_state(), input);
    Ok(match check_monolithic(solver, &q, check_timeout, None)? {
        SolverVerdict::Unsat => StuckCheck::Stuck,
        SolverVerdict::Sat(_) => StuckCheck::HasSuccessor,
        SolverVerdict::Unknown(r) => StuckCheck::Undetermined(r),
        SolverVerdict::Timeout => StuckCheck::Undetermined("timeout".into()),
    })
}

/// Replays a counterexample and confirms that it is stuck.
pub fn validate_counterexample(
    contract: &TypedContract,
    trace: &Trace,
    n: usize,
    opts: &EngineOptions,
) -> Result<Validation, EngineError> {
    let mismatch = |detail: String| EngineError::CounterexampleMismatch { depth: n, detail };
    match replay_trace(contract, trace) {
        Ok(ReplayVerdict::NeedsSuccessorCheck) => {}
        Ok(ReplayVerdict::Valid) => return Err(mismatch("trace has no stuck input".into())),
        Err(f) => return Err(mismatch(f.to_string())),
    }
    match confirm_stuck(contract, trace, &opts.solver, opts.per_check_timeout)? {
        StuckCheck::Stuck => Ok(Validation::Confirmed),
        StuckCheck::HasSuccessor => Err(mismatch("the last state has a successor for the stuck input".into())),
        StuckCheck::Undetermined(r) => Ok(Validation::Unconfirmed(r)),
    }
}

/// Writes the base and extend scripts for depth `n` as `base_<n>.smt2` and
/// `extend_<n>.smt2`.
pub fn write_depth_scripts(contract: &TypedContract, n: usize, simplify: bool, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    [build_base_negation(contract, n), build_extend_negation(contract, n)]
        .iter()
        .map(|q| write_script(q, simplify, dir))
        .collect()
}

fn write_script(q: &QueryFormula, simplify: bool, dir: &Path) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.smt2", q.kind));
    let text = if simplify { emit_script(&q.simplified()) } else { emit_script(q) };
    std::fs::write(&path, text)?;
    Ok(path)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    Base,
    Extend,
}

type Event = (Family, usize, Result<SolverVerdict, SolverError>);

enum Decision {
    Unrealizable(usize, Assignment),
    Realizable(usize),
    Unknown(Option<usize>, UnknownReason),
    Failed(SolverError),
}

/// Collects per-depth outcomes from either family, in any order, and makes
/// the decision the sequential loop would make.
struct Arbiter {
    max_depth: usize,
    cursor: usize,
    base: HashMap<usize, Result<SolverVerdict, SolverError>>,
    extend: HashMap<usize, Result<SolverVerdict, SolverError>>,
}

fn unknown_reason(v: &SolverVerdict) -> Option<UnknownReason> {
    match v {
        SolverVerdict::Unknown(r) => Some(UnknownReason::SolverUnknown(r.clone())),
        SolverVerdict::Timeout => Some(UnknownReason::Timeout),
        _ => None,
    }
}

impl Arbiter {
    fn new(max_depth: usize) -> Self {
        Arbiter { max_depth, cursor: 0, base: HashMap::new(), extend: HashMap::new() }
    }

    /// Deepest depth at which the base check is known to hold.
    fn base_reached(&self) -> Option<usize> {
        let mut reached = None;
        let mut k = 0;
        while let Some(Ok(SolverVerdict::Unsat)) = self.base.get(&k) {
            reached = Some(k);
            k += 1;
        }
        reached
    }

    fn record(&mut self, (family, n, outcome): Event) -> Option<Decision> {
        match family {
            Family::Base => self.base.insert(n, outcome),
            Family::Extend => self.extend.insert(n, outcome),
        };
        self.decide()
    }

    fn decide(&mut self) -> Option<Decision> {
        loop {
            let n = self.cursor;
            if n > self.max_depth {
                return Some(Decision::Unknown(self.base_reached(), UnknownReason::MaxDepth));
            }
            match self.base.get(&n)? {
                Ok(SolverVerdict::Unsat) => {}
                Ok(SolverVerdict::Sat(_)) => {
                    let Some(Ok(SolverVerdict::Sat(a))) = self.base.remove(&n) else { unreachable!() };
                    return Some(Decision::Unrealizable(n, a));
                }
                Ok(v) => {
                    let reason = unknown_reason(v).expect("unknown or timeout");
                    return Some(Decision::Unknown(n.checked_sub(1), reason));
                }
                Err(_) => {
                    let Some(Err(e)) = self.base.remove(&n) else { unreachable!() };
                    return Some(Decision::Failed(e));
                }
            }
            match self.extend.get(&n)? {
                Ok(SolverVerdict::Unsat) => return Some(Decision::Realizable(n)),
                Ok(SolverVerdict::Sat(_)) => self.cursor += 1,
                Ok(v) => return Some(Decision::Unknown(Some(n), unknown_reason(v).expect("unknown or timeout"))),
                Err(_) => {
                    let Some(Err(e)) = self.extend.remove(&n) else { unreachable!() };
                    return Some(Decision::Failed(e));
                }
            }
        }
    }
}

struct Loop<'a> {
    contract: &'a TypedContract,
    opts: &'a EngineOptions,
    deadline: Instant,
}

impl Loop<'_> {
    fn check(&self, session: &mut Session, family: Family, n: usize) -> Result<SolverVerdict, SolverError> {
        if Instant::now() >= self.deadline {
            return Ok(SolverVerdict::Timeout);
        }
        let anchored = family == Family::Base;
        if let Some(dir) = &self.opts.dump_dir {
            let q = if anchored { build_base_negation(self.contract, n) } else { build_extend_negation(self.contract, n) };
            write_script(&q, self.opts.simplify, dir).map_err(SolverError::Io)?;
        }
        let dq = depth_query(self.contract, n, anchored, self.opts.simplify);
        session.check_incremental(&dq.base, &dq.delta, &dq.symbols, Some(self.deadline))
    }

    /// Runs one family's depths in order until its outcome stops the loop.
    fn run_family(&self, mut session: Session, family: Family, cancel: &AtomicBool, tx: mpsc::Sender<Event>) {
        for n in 0..=self.opts.max_depth {
            if cancel.load(Ordering::SeqCst) {
                return;
            }
            let outcome = self.check(&mut session, family, n);
            let go_on = match (&outcome, family) {
                (Ok(SolverVerdict::Unsat), Family::Base) => true,
                (Ok(SolverVerdict::Sat(_)), Family::Extend) => true,
                _ => false,
            };
            if tx.send((family, n, outcome)).is_err() || !go_on {
                return;
            }
        }
    }

    fn sequential(&self, mut base: Session, mut extend: Session) -> Decision {
        let mut arbiter = Arbiter::new(self.opts.max_depth);
        for n in 0..=self.opts.max_depth {
            for (family, session) in [(Family::Base, &mut base), (Family::Extend, &mut extend)] {
                let outcome = self.check(session, family, n);
                if let Some(d) = arbiter.record((family, n, outcome)) {
                    return d;
                }
            }
        }
        arbiter.decide().expect("all depths decided")
    }

    fn parallel(&self, base: Session, extend: Session) -> Decision {
        let killers = [base.killer(), extend.killer()];
        let cancel = AtomicBool::new(false);
        let (tx, rx) = mpsc::channel();
        thread::scope(|scope| {
            let tx2 = tx.clone();
            let cancel_ref = &cancel;
            scope.spawn(move || self.run_family(base, Family::Base, cancel_ref, tx));
            scope.spawn(move || self.run_family(extend, Family::Extend, cancel_ref, tx2));
            let mut arbiter = Arbiter::new(self.opts.max_depth);
            let decision = loop {
                let left = self.deadline.saturating_duration_since(Instant::now());
                match rx.recv_timeout(left + Duration::from_millis(500)) {
                    Ok(event) => {
                        if let Some(d) = arbiter.record(event) {
                            break d;
                        }
                    }
                    Err(mpsc::RecvTimeoutError::Timeout) => {
                        break Decision::Unknown(arbiter.base_reached(), UnknownReason::Timeout)
                    }
                    Err(mpsc::RecvTimeoutError::Disconnected) => {
                        break arbiter.decide().unwrap_or(Decision::Failed(SolverError::Dead))
                    }
                }
            };
            cancel.store(true, Ordering::SeqCst);
            for k in &killers {
                k.kill();
            }
            decision
        })
    }
}

fn initial_check(contract: &TypedContract, opts: &EngineOptions, deadline: Instant) -> Result<SolverVerdict, EngineError> {
    let q = build_initial_sat(contract);
    if let Some(dir) = &opts.dump_dir {
        write_script(&q, opts.simplify, dir).map_err(SolverError::Io)?;
    }
    Ok(check_monolithic(&opts.solver, &q, opts.per_check_timeout, Some(deadline))?)
}

/// Decides realizability of `contract`. Solver failures are errors, never
/// verdicts.
pub fn check_realizability(contract: &TypedContract, opts: &EngineOptions) -> Result<Report, EngineError> {
    opts.validate()?;
    let start = Instant::now();
    let deadline = start + opts.overall_timeout;
    let report = |result: CheckResult, base_depth_reached| Report { result, elapsed: start.elapsed(), base_depth_reached };

    match initial_check(contract, opts, deadline)? {
        SolverVerdict::Sat(_) => {}
        SolverVerdict::Unsat => {
            let result = CheckResult::Unrealizable {
                n: 0,
                trace: Trace::default(),
                spurious_possible: true,
                no_initial_state: true,
                validation: Validation::Confirmed,
            };
            return Ok(report(result, None));
        }
        v => {
            let reason = unknown_reason(&v).expect("unknown or timeout");
            return Ok(report(CheckResult::Unknown { base_depth_reached: None, reason }, None));
        }
    }

    let base = Session::start(&opts.solver, opts.per_check_timeout)?;
    let extend = Session::start(&opts.solver, opts.per_check_timeout)?;
    let lp = Loop { contract, opts, deadline };
    let decision = if opts.parallel { lp.parallel(base, extend) } else { lp.sequential(base, extend) };

    match decision {
        Decision::Failed(e) => Err(e.into()),
        Decision::Realizable(n) => Ok(report(CheckResult::Realizable { n }, Some(n))),
        Decision::Unknown(reached, reason) => {
            Ok(report(CheckResult::Unknown { base_depth_reached: reached, reason }, reached))
        }
        Decision::Unrealizable(n, assignment) => {
            let trace = extract_counterexample(&assignment, n, contract);
            let validation = if opts.validate_counterexamples {
                validate_counterexample(contract, &trace, n, opts)?
            } else {
                Validation::Skipped
            };
            let result = CheckResult::Unrealizable {
                n,
                trace,
                spurious_possible: true,
                no_initial_state: false,
                validation,
            };
            Ok(report(result, n.checked_sub(1)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::load_contract;
    use crate::eval::Value;

    const EX1: &str = "input i:int; state s:int; assume true; init true; trans s <> 0;";
    const EX2: &str = "input i:int; state s:int; init s >= 0; trans s' = s - 1 and s' >= 0;";
    const COUNTER: &str = "input i:int; state x:int; init x = 0; trans x' = x + 1 and x >= 0;";

    fn run(src: &str, parallel: bool) -> Report {
        let c = load_contract(src).unwrap();
        let opts = EngineOptions { parallel, solver: SolverCommand::default(), ..Default::default() };
        check_realizability(&c, &opts).unwrap()
    }

    #[test]
    fn example_one_spurious_counterexample() {
        for parallel in [false, true] {
            let r = run(EX1, parallel);
            let CheckResult::Unrealizable { n, trace, spurious_possible, validation, no_initial_state } = r.result
            else {
                panic!("{:?}", r.result)
            };
            assert_eq!(n, 0);
            assert!(spurious_possible && !no_initial_state);
            assert_eq!(validation, Validation::Confirmed);
            assert_eq!(trace.initial.get("s"), Some(&Value::int(0)));
            assert!(trace.steps.is_empty());
        }
    }

    #[test]
    fn example_two_unrealizable_at_zero() {
        for parallel in [false, true] {
            let r = run(EX2, parallel);
            assert_eq!((r.result.kind(), r.result.depth()), ("unrealizable", Some(0)));
        }
    }

    #[test]
    fn counter_realizable_at_one() {
        for parallel in [false, true] {
            let r = run(COUNTER, parallel);
            assert_eq!(r.result, CheckResult::Realizable { n: 1 });
            assert_eq!(r.base_depth_reached, Some(1));
        }
    }

    #[test]
    fn trivial_realizable_at_zero() {
        assert_eq!(run("state s:int;", true).result, CheckResult::Realizable { n: 0 });
    }

    #[test]
    fn empty_initial_guarantee() {
        let r = run("state s:int; init s <> s;", true);
        assert!(matches!(r.result, CheckResult::Unrealizable { n: 0, no_initial_state: true, .. }));
    }

    #[test]
    fn max_depth_exhaustion() {
        let src = "input i:int; state x:int; init x >= 0; trans x' = x + 1;";
        let c = load_contract(src).unwrap();
        let r = check_realizability(&c, &EngineOptions { max_depth: 3, solver: SolverCommand::default(), ..Default::default() })
            .unwrap();
        assert_eq!(r.result, CheckResult::Realizable { n: 0 });

        // Gets stuck once y reaches 3, so the base check only fails at depth 3.
        let grows = "input i:int; state x:int; state y:int; init x = 0 and y = 0; \
                     trans y' = y + 1 and x' = x and (y >= 3 => x <> x');";
        let c = load_contract(grows).unwrap();
        for parallel in [false, true] {
            let opts = EngineOptions { max_depth: 1, parallel, solver: SolverCommand::default(), ..Default::default() };
            let r = check_realizability(&c, &opts).unwrap();
            assert_eq!(
                r.result,
                CheckResult::Unknown { base_depth_reached: Some(1), reason: UnknownReason::MaxDepth },
                "parallel={parallel}"
            );
        }
    }

    #[test]
    fn extraction_reindexes() {
        let c = load_contract(EX1).unwrap();
        let a = Assignment(
            [
                (StepVar::at("s", 0), Value::int(2)),
                (StepVar::at("i", 1), Value::int(0)),
                (StepVar::at("s", 1), Value::int(1)),
                (StepVar::at("i", 2), Value::int(5)),
            ]
            .into_iter()
            .collect(),
        );
        let t = extract_counterexample(&a, 1, &c);
        assert_eq!(t.initial, Valuation::new().with("s", Value::int(2)));
        assert_eq!(t.steps.len(), 1);
        assert_eq!(t.steps[0].next, Valuation::new().with("s", Value::int(1)));
        assert_eq!(t.stuck_input, Some(Valuation::new().with("i", Value::int(5))));
    }

    #[test]
    fn fabricated_trace_is_not_stuck() {
        let c = load_contract(COUNTER).unwrap();
        let t = Trace {
            initial: Valuation::new().with("x", Value::int(0)),
            steps: vec![],
            stuck_input: Some(Valuation::new().with("i", Value::int(0))),
        };
        let v = confirm_stuck(&c, &t, &SolverCommand::default(), Duration::from_secs(20)).unwrap();
        assert_eq!(v, StuckCheck::HasSuccessor);
        let opts = EngineOptions { solver: SolverCommand::default(), ..Default::default() };
        assert!(matches!(
            validate_counterexample(&c, &t, 0, &opts),
            Err(EngineError::CounterexampleMismatch { depth: 0, .. })
        ));
    }

    #[test]
    fn bad_options() {
        let c = load_contract(EX1).unwrap();
        let opts = EngineOptions { per_check_timeout: Duration::ZERO, ..Default::default() };
        assert!(matches!(check_realizability(&c, &opts), Err(EngineError::Options(_))));
    }

    #[test]
    fn missing_solver_is_an_error() {
        let c = load_contract(EX1).unwrap();
        let opts = EngineOptions { solver: SolverCommand::parse("no-such-solver-here").unwrap(), ..Default::default() };
        assert!(matches!(check_realizability(&c, &opts), Err(EngineError::Solver(SolverError::Spawn { .. }))));
    }

    #[test]
    fn dumps_queries() {
        let dir = tempfile::tempdir().unwrap();
        let c = load_contract(COUNTER).unwrap();
        let opts = EngineOptions {
            parallel: false,
            dump_dir: Some(dir.path().to_path_buf()),
            solver: SolverCommand::default(),
            ..Default::default()
        };
        check_realizability(&c, &opts).unwrap();
        for name in ["initial", "base_0", "extend_0", "base_1", "extend_1"] {
            assert!(dir.path().join(format!("{name}.smt2")).exists(), "{name}");
        }
    }
}
