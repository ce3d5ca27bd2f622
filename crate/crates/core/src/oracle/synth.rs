use std::collections::VecDeque;

use super::Oracle;
use crate::error::OracleError;

/// An explicit transition system over an oracle's state and input indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionSystemTable {
    pub initial: Vec<usize>,
    /// `transitions[s * inputs + i]`: the allowed successors, ascending.
    pub transitions: Vec<Vec<u32>>,
    pub num_inputs: usize,
}

impl TransitionSystemTable {
    pub fn successors(&self, s: usize, i: usize) -> &[u32] {
        &self.transitions[s * self.num_inputs + i]
    }

    /// States reachable from an initial state along transitions whose input
    /// satisfies the assumption.
    pub fn reachable(&self, oracle: &Oracle) -> Vec<bool> {
        let mut seen = vec![false; oracle.num_states()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &s in &self.initial {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for i in 0..oracle.num_inputs() {
                if !oracle.assumes(s, i) {
                    continue;
                }
                for &t in self.successors(s, i) {
                    if !seen[t as usize] {
                        seen[t as usize] = true;
                        queue.push_back(t as usize);
                    }
                }
            }
        }
        seen
    }

    /// Checks the four realization conditions exhaustively: initial states
    /// meet the initial guarantee, reachable transitions under valid inputs
    /// meet the transition guarantee, some initial state exists, and every
    /// reachable state answers every valid input.
    pub fn audit(&self, oracle: &Oracle) -> Result<(), String> {
        if let Some(&s) = self.initial.iter().find(|&&s| !oracle.initial(s)) {
            return Err(format!("initial state {} violates the initial guarantee", oracle.state(s)));
        }
        let reach = self.reachable(oracle);
        for s in (0..oracle.num_states()).filter(|&s| reach[s]) {
            for i in (0..oracle.num_inputs()).filter(|&i| oracle.assumes(s, i)) {
                let succ = self.successors(s, i);
                if let Some(&t) = succ.iter().find(|&&t| !oracle.guarantees(s, i, t as usize)) {
                    return Err(format!(
                        "transition {} --{}--> {} violates the transition guarantee",
                        oracle.state(s),
                        oracle.input(i),
                        oracle.state(t as usize)
                    ));
                }
                if succ.is_empty() {
                    return Err(format!("reachable state {} has no successor for {}", oracle.state(s), oracle.input(i)));
                }
            }
        }
        if self.initial.is_empty() {
            return Err("no initial state".into());
        }
        Ok(())
    }
}

impl Oracle<'_> {
    /// Builds `I = {s0}` and `T = G_T ∧ Viable(s')`, where `s0` is the least
    /// viable initial-guarantee state in enumeration order.
    pub fn synthesize_realization(&self) -> Result<TransitionSystemTable, OracleError> {
        let viable = self.viable();
        let s0 = (0..self.num_states())
            .find(|&s| self.initial(s) && viable[s])
            .ok_or(OracleError::NotRealizable)?;
        let transitions = (0..self.num_states())
            .flat_map(|s| (0..self.num_inputs()).map(move |i| (s, i)))
            .map(|(s, i)| self.successors(s, i).iter().copied().filter(|&t| viable[t as usize]).collect())
            .collect();
        Ok(TransitionSystemTable { initial: vec![s0], transitions, num_inputs: self.num_inputs() })
    }

    /// Ranks every state from which the environment can force a dead end.
    pub fn attractor(&self) -> Refutation {
        Refutation::compute(self)
    }

    /// An environment strategy defeating every initial-guarantee state, or
    /// `None` when some initial-guarantee state is viable.
    pub fn refutation(&self) -> Option<Refutation> {
        let r = Refutation::compute(self);
        (0..self.num_states()).all(|s| !self.initial(s) || r.rank[s].is_some()).then_some(r)
    }
}

/// Ranks non-viable states by how many steps the environment needs to force
/// the guarantee into a dead end. A rank-0 state has a valid input with no
/// successor; a rank-`k` state has a valid input all of whose successors have
/// smaller rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Refutation {
    /// `(rank, witness input)` per state; `None` for viable states.
    pub rank: Vec<Option<(u32, usize)>>,
}

impl Refutation {
    fn compute(oracle: &Oracle) -> Refutation {
        let mut rank: Vec<Option<(u32, usize)>> = vec![None; oracle.num_states()];
        let mut level = 0u32;
        loop {
            let mut found = Vec::new();
            for s in (0..oracle.num_states()).filter(|&s| rank[s].is_none()) {
                let forced = (0..oracle.num_inputs()).find(|&i| {
                    oracle.assumes(s, i) && oracle.successors(s, i).iter().all(|&t| rank[t as usize].is_some())
                });
                if let Some(i) = forced {
                    found.push((s, i));
                }
            }
            if found.is_empty() {
                return Refutation { rank };
            }
            for (s, i) in found {
                rank[s] = Some((level, i));
            }
            level += 1;
        }
    }

    /// Re-checks the certificate from the tables alone. A valid certificate
    /// covering an initial-guarantee state means no realization exists:
    /// that state would be reachable, and following the witness inputs any
    /// realization must reach a rank-0 state it cannot leave.
    pub fn check(&self, oracle: &Oracle) -> Result<(), String> {
        self.check_ranks(oracle)?;
        if (0..oracle.num_states()).any(|s| oracle.initial(s) && self.rank[s].is_none()) {
            return Err("some initial-guarantee state is unranked".into());
        }
        Ok(())
    }

    /// Each ranked state's witness input is valid and leads only to states of
    /// smaller rank. Ranked states then belong to no fixpoint of the
    /// viability operator.
    pub fn check_ranks(&self, oracle: &Oracle) -> Result<(), String> {
        for (s, r) in self.rank.iter().enumerate() {
            let Some((k, i)) = *r else { continue };
            if !oracle.assumes(s, i) {
                return Err(format!("witness input {} is not valid at {}", oracle.input(i), oracle.state(s)));
            }
            for &t in oracle.successors(s, i) {
                match self.rank[t as usize] {
                    Some((kt, _)) if kt < k => {}
                    _ => {
                        return Err(format!(
                            "successor {} of {} is not ranked below {k}",
                            oracle.state(t as usize),
                            oracle.state(s)
                        ))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn covers(&self, s: usize) -> bool {
        self.rank[s].is_some()
    }
}
