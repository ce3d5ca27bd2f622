use std::fmt;

use serde::{Deserialize, Serialize};

use super::{eval_bool, Role, StepEnv, Valuation};
use crate::contract::TypedContract;
use crate::error::EvalError;

/// A concrete run of the contract: an initial state followed by
/// (input, next state) pairs, optionally ending in an input for which the
/// last state is claimed to have no successor.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub initial: Valuation,
    pub steps: Vec<TraceStep>,
    pub stuck_input: Option<Valuation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub input: Valuation,
    pub next: Valuation,
}

impl Trace {
    /// The state reached after the last step.
    pub fn last_state(&self) -> &Valuation {
        self.steps.last().map_or(&self.initial, |s| &s.next)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Trace> {
        serde_json::from_str(text)
    }
}

/// Position in a trace that replay is checking.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReplayPoint {
    Initial,
    /// 1-based transition index.
    Step(usize),
    Stuck,
}

impl fmt::Display for ReplayPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReplayPoint::Initial => f.write_str("initial state"),
            ReplayPoint::Step(k) => write!(f, "step {k}"),
            ReplayPoint::Stuck => f.write_str("stuck input"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    /// The valuation does not bind the variables it must.
    Coverage,
    InitialGuarantee,
    Assumption,
    TransitionGuarantee,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Coverage => "coverage",
            Condition::InitialGuarantee => "initial guarantee",
            Condition::Assumption => "assumption",
            Condition::TransitionGuarantee => "transition guarantee",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayFailure {
    pub point: ReplayPoint,
    pub condition: Condition,
    /// Bindings the condition was evaluated under; post-state names carry a `'`.
    pub values: Valuation,
    pub detail: Option<EvalError>,
}

impl fmt::Display for ReplayFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} fails at {}", self.condition, self.point)?;
        if !self.values.is_empty() {
            let parts: Vec<String> = self.values.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, " with {}", parts.join(", "))?;
        }
        if let Some(e) = &self.detail {
            write!(f, " ({e})")?;
        }
        Ok(())
    }
}

/// Outcome of a successful replay.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReplayVerdict {
    /// The trace is a valid run and carries no stuck input.
    Valid,
    /// Every evaluable condition holds. Whether the last state really has no
    /// successor for the stuck input needs a solver query.
    NeedsSuccessorCheck,
}

fn merged(state: Option<&Valuation>, input: Option<&Valuation>, next: Option<&Valuation>) -> Valuation {
    let mut out = Valuation::new();
    for (k, v) in state.into_iter().chain(input).flat_map(|v| v.iter()) {
        out.insert(k.clone(), v.clone());
    }
    for (k, v) in next.into_iter().flat_map(|v| v.iter()) {
        out.insert(format!("{k}'"), v.clone());
    }
    out
}

/// Checks a trace against the contract, reporting the first failing condition.
pub fn replay_trace(contract: &TypedContract, trace: &Trace) -> Result<ReplayVerdict, ReplayFailure> {
    let decls = contract.decls();
    let fail = |point, condition, env: StepEnv, detail| ReplayFailure {
        point,
        condition,
        values: merged(env.state, env.input, env.next),
        detail,
    };
    let cover = |point, valuation: &Valuation, role, env: StepEnv| {
        valuation
            .check_role(decls, role)
            .map_err(|e| fail(point, Condition::Coverage, env, Some(e)))
    };
    let holds = |point, condition, term, env: StepEnv| match eval_bool(term, &env) {
        Ok(true) => Ok(()),
        Ok(false) => Err(fail(point, condition, env, None)),
        Err(e) => Err(fail(point, condition, env, Some(e))),
    };

    let env = StepEnv::state(&trace.initial);
    cover(ReplayPoint::Initial, &trace.initial, Role::StateOnly, env)?;
    holds(ReplayPoint::Initial, Condition::InitialGuarantee, &contract.initial, env)?;

    let mut prev = &trace.initial;
    for (k, step) in trace.steps.iter().enumerate() {
        let point = ReplayPoint::Step(k + 1);
        let env = StepEnv::transition(prev, &step.input, &step.next);
        cover(point, &step.input, Role::InputOnly, env)?;
        cover(point, &step.next, Role::StateOnly, env)?;
        holds(point, Condition::Assumption, &contract.assumption, env)?;
        holds(point, Condition::TransitionGuarantee, &contract.transition, env)?;
        prev = &step.next;
    }

    match &trace.stuck_input {
        None => Ok(ReplayVerdict::Valid),
        Some(input) => {
            let env = StepEnv::step(prev, input);
            cover(ReplayPoint::Stuck, input, Role::InputOnly, env)?;
            holds(ReplayPoint::Stuck, Condition::Assumption, &contract.assumption, env)?;
            Ok(ReplayVerdict::NeedsSuccessorCheck)
        }
    }
}
