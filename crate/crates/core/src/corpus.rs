//! Differential runs of the engine against the finite-domain oracle on
//! generated contracts.

use std::fmt;
use std::time::Duration;

use crate::contract::TypedContract;
use crate::engine::{check_realizability, CheckResult, EngineOptions, Validation};
use crate::error::{EngineError, SolverError};
use crate::eval::{replay_trace, ReplayVerdict};
use crate::oracle::{random_contract, GeneratorParams, Oracle};
use crate::smtlib::{check_monolithic, depth_query, Session, SolverCommand, SolverVerdict};
use crate::unroll::{build_base_negation, build_extend_negation};

#[derive(Clone, Debug)]
pub struct SeedOutcome {
    pub seed: u64,
    pub oracle_realizable: bool,
    /// `None` when the engine's own counterexample validation failed.
    pub result: Option<CheckResult>,
    /// Why the engine's answer contradicts the oracle, if it does.
    pub violation: Option<String>,
}

impl fmt::Display for SeedOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let oracle = if self.oracle_realizable { "realizable" } else { "unrealizable" };
        write!(f, "seed {:>5}  oracle {oracle:<12}  engine ", self.seed)?;
        match &self.result {
            Some(r) => {
                f.write_str(r.kind())?;
                if let Some(n) = r.depth() {
                    write!(f, "({n})")?;
                }
            }
            None => f.write_str("invalid counterexample")?,
        }
        if let Some(v) = &self.violation {
            write!(f, "  VIOLATION: {v}")?;
        }
        Ok(())
    }
}

/// Compares an engine verdict with exact answers on the contract's domain.
///
/// Generated contracts carry their range constraints, so the engine's checks
/// over unbounded integers coincide with the oracle's finite ones and the
/// depth of a decided verdict must match too.
pub fn judge(oracle: &Oracle, result: &CheckResult) -> Option<String> {
    if let Some(n) = result.depth() {
        let realizable = matches!(result, CheckResult::Realizable { .. });
        let exact = oracle.algorithm_verdict(n);
        if exact != Some((realizable, n)) {
            return Some(format!("{}({n}) but the exact checks give {exact:?}", result.kind()));
        }
    }
    match result {
        CheckResult::Realizable { n } => {
            if !oracle.realizable() {
                return Some(format!("realizable at {n} but the oracle finds no viable initial state"));
            }
            if !oracle.extend_check(*n) || !(0..=*n).all(|k| oracle.base_check_simplified(k)) {
                return Some(format!("realizable at {n} but the exact checks do not hold there"));
            }
            None
        }
        CheckResult::Unrealizable { n, trace, validation, no_initial_state, .. } => {
            if *no_initial_state {
                return (0..oracle.num_states()).any(|s| oracle.initial(s)).then(|| "initial state exists".into());
            }
            if *validation != Validation::Confirmed {
                return Some(format!("counterexample not confirmed: {validation:?}"));
            }
            if replay_trace(oracle.contract(), trace) != Ok(ReplayVerdict::NeedsSuccessorCheck) {
                return Some("counterexample does not replay".into());
            }
            let last = oracle.state_index(trace.last_state());
            let input = trace.stuck_input.as_ref().and_then(|i| (0..oracle.num_inputs()).find(|&k| oracle.input(k) == i));
            match (last, input) {
                (Some(s), Some(i)) if oracle.assumes(s, i) && oracle.successors(s, i).is_empty() => {}
                _ => return Some("counterexample is not stuck on the finite domain".into()),
            }
            if oracle.base_check_simplified(*n) {
                return Some(format!("unrealizable at {n} but the exact simplified base check holds"));
            }
            None
        }
        CheckResult::Unknown { .. } => None,
    }
}

/// Runs the engine on one generated contract and judges the result.
pub fn check_seed(seed: u64, params: &GeneratorParams, opts: &EngineOptions) -> Result<SeedOutcome, EngineError> {
    let (contract, dom) = random_contract(seed, params);
    let oracle = Oracle::new(&contract, &dom).expect("generated domains are within the cap");
    let (result, violation) = match check_realizability(&contract, opts) {
        Ok(report) => {
            let v = judge(&oracle, &report.result);
            (Some(report.result), v)
        }
        Err(EngineError::CounterexampleMismatch { depth, detail }) => {
            (None, Some(format!("counterexample at depth {depth} failed validation: {detail}")))
        }
        Err(e) => return Err(e),
    };
    Ok(SeedOutcome { seed, oracle_realizable: oracle.realizable(), result, violation })
}

/// Outcome of one check, without the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerdictKind {
    Sat,
    Unsat,
    Unknown,
}

impl From<&SolverVerdict> for VerdictKind {
    fn from(v: &SolverVerdict) -> Self {
        match v {
            SolverVerdict::Sat(_) => VerdictKind::Sat,
            SolverVerdict::Unsat => VerdictKind::Unsat,
            SolverVerdict::Unknown(_) | SolverVerdict::Timeout => VerdictKind::Unknown,
        }
    }
}

/// Base and extend verdicts for depths `0..=max_depth`, either from one
/// incremental session per family or from a fresh solver per query.
pub fn verdict_sequences(
    contract: &TypedContract,
    max_depth: usize,
    solver: &SolverCommand,
    check_timeout: Duration,
    incremental: bool,
) -> Result<[Vec<VerdictKind>; 2], SolverError> {
    let mut out = [Vec::new(), Vec::new()];
    for (k, anchored) in [true, false].into_iter().enumerate() {
        if incremental {
            let mut session = Session::start(solver, check_timeout)?;
            for n in 0..=max_depth {
                let q = depth_query(contract, n, anchored, false);
                out[k].push((&session.check_incremental(&q.base, &q.delta, &q.symbols, None)?).into());
            }
        } else {
            for n in 0..=max_depth {
                let q = if anchored { build_base_negation(contract, n) } else { build_extend_negation(contract, n) };
                out[k].push((&check_monolithic(solver, &q, check_timeout, None)?).into());
            }
        }
    }
    Ok(out)
}
