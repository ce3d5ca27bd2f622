//! Exact answers on finite domains by exhaustive enumeration: the viable
//! states, the finite approximations the algorithm relies on, realizations
//! and refutations, and a random contract generator.

mod domain;
mod generate;
pub mod properties;
mod synth;

pub use domain::{Carrier, DomainSpec, ANNOTATION, DEFAULT_CAP};
pub use generate::{random_contract, GeneratorParams};
pub use synth::{Refutation, TransitionSystemTable};

use std::cell::RefCell;

use crate::contract::{TypedContract, VarKind};
use crate::error::OracleError;
use crate::eval::{eval_bool, StepEnv, Valuation};

/// A contract's assumption and guarantees tabulated over a finite domain.
/// States and inputs are referred to by their index in enumeration order.
pub struct Oracle<'a> {
    contract: &'a TypedContract,
    states: Vec<Valuation>,
    inputs: Vec<Valuation>,
    init: Vec<bool>,
    /// `assume[s * inputs + i]`.
    assume: Vec<bool>,
    /// `succ[s * inputs + i]`: every `s'` with `G_T(s, i, s')`, ascending.
    succ: Vec<Vec<u32>>,
    viable: RefCell<Option<Vec<bool>>>,
    viable_levels: RefCell<Vec<Vec<bool>>>,
    extend_levels: RefCell<Vec<Vec<bool>>>,
}

impl<'a> Oracle<'a> {
    pub fn new(contract: &'a TypedContract, dom: &DomainSpec) -> Result<Oracle<'a>, OracleError> {
        let carriers = dom.carriers_for(contract)?;
        let (state_vars, input_vars): (Vec<_>, Vec<_>) =
            carriers.into_iter().partition(|(d, _)| d.kind == VarKind::State);
        let states = domain::enumerate(&state_vars);
        let inputs = domain::enumerate(&input_vars);

        let init = states
            .iter()
            .map(|s| eval_bool(&contract.initial, &StepEnv::state(s)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut assume = Vec::with_capacity(states.len() * inputs.len());
        let mut succ = Vec::with_capacity(states.len() * inputs.len());
        for s in &states {
            for i in &inputs {
                assume.push(eval_bool(&contract.assumption, &StepEnv::step(s, i))?);
                let mut next = Vec::new();
                for (k, t) in states.iter().enumerate() {
                    if eval_bool(&contract.transition, &StepEnv::transition(s, i, t))? {
                        next.push(k as u32);
                    }
                }
                succ.push(next);
            }
        }
        Ok(Oracle {
            contract,
            states,
            inputs,
            init,
            assume,
            succ,
            viable: RefCell::new(None),
            viable_levels: RefCell::new(vec![]),
            extend_levels: RefCell::new(vec![]),
        })
    }

    pub fn contract(&self) -> &TypedContract {
        self.contract
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn state(&self, s: usize) -> &Valuation {
        &self.states[s]
    }

    pub fn input(&self, i: usize) -> &Valuation {
        &self.inputs[i]
    }

    pub fn state_index(&self, v: &Valuation) -> Option<usize> {
        self.states.iter().position(|s| s == v)
    }

    pub fn initial(&self, s: usize) -> bool {
        self.init[s]
    }

    pub fn assumes(&self, s: usize, i: usize) -> bool {
        self.assume[s * self.inputs.len() + i]
    }

    pub fn successors(&self, s: usize, i: usize) -> &[u32] {
        &self.succ[s * self.inputs.len() + i]
    }

    pub fn guarantees(&self, s: usize, i: usize, t: usize) -> bool {
        self.successors(s, i).binary_search(&(t as u32)).is_ok()
    }

    /// One application of the viability operator:
    /// `{s | forall i. A(s,i) => exists s' in set. G_T(s,i,s')}`.
    pub fn step_operator(&self, set: &[bool]) -> Vec<bool> {
        (0..self.num_states())
            .map(|s| {
                (0..self.num_inputs())
                    .all(|i| !self.assumes(s, i) || self.successors(s, i).iter().any(|&t| set[t as usize]))
            })
            .collect()
    }

    /// The greatest fixpoint of the viability operator, by round-robin
    /// passes from the full set.
    pub fn viable(&self) -> Vec<bool> {
        if let Some(v) = self.viable.borrow().as_ref() {
            return v.clone();
        }
        let mut set = vec![true; self.num_states()];
        loop {
            let mut changed = false;
            for s in 0..self.num_states() {
                if set[s]
                    && !(0..self.num_inputs()).all(|i| {
                        !self.assumes(s, i) || self.successors(s, i).iter().any(|&t| set[t as usize])
                    })
                {
                    set[s] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        *self.viable.borrow_mut() = Some(set.clone());
        set
    }

    pub fn viable_states(&self) -> Vec<Valuation> {
        self.viable()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(|(s, _)| self.states[s].clone())
            .collect()
    }

    /// Some initial-guarantee state is viable.
    pub fn realizable(&self) -> bool {
        let v = self.viable();
        (0..self.num_states()).any(|s| self.init[s] && v[s])
    }

    /// `Viable_n` for every state.
    pub fn viable_n_all(&self, n: usize) -> Vec<bool> {
        let mut levels = self.viable_levels.borrow_mut();
        if levels.is_empty() {
            levels.push(vec![true; self.num_states()]);
        }
        while levels.len() <= n {
            let next = self.step_operator(levels.last().expect("level 0"));
            levels.push(next);
        }
        levels[n].clone()
    }

    /// `Extend_n` for every state: every valid `n`-step path from the state
    /// can take one more step for any valid input.
    pub fn extend_n_all(&self, n: usize) -> Vec<bool> {
        let mut levels = self.extend_levels.borrow_mut();
        if levels.is_empty() {
            levels.push(self.step_operator(&vec![true; self.num_states()]));
        }
        while levels.len() <= n {
            let prev = levels.last().expect("level 0");
            let next = (0..self.num_states())
                .map(|s| {
                    (0..self.num_inputs())
                        .all(|i| !self.assumes(s, i) || self.successors(s, i).iter().all(|&t| prev[t as usize]))
                })
                .collect();
            levels.push(next);
        }
        levels[n].clone()
    }

    pub fn viable_n(&self, s: usize, n: usize) -> bool {
        self.viable_n_all(n)[s]
    }

    pub fn extend_n(&self, s: usize, n: usize) -> bool {
        self.extend_n_all(n)[s]
    }

    /// `exists s. G_I(s) and Viable_n(s)`.
    pub fn base_check(&self, n: usize) -> bool {
        let v = self.viable_n_all(n);
        (0..self.num_states()).any(|s| self.init[s] && v[s])
    }

    /// `forall s. G_I(s) => Extend_n(s)`.
    pub fn base_check_simplified(&self, n: usize) -> bool {
        let e = self.extend_n_all(n);
        (0..self.num_states()).all(|s| !self.init[s] || e[s])
    }

    /// `forall s. Extend_n(s)`.
    pub fn extend_check(&self, n: usize) -> bool {
        self.extend_n_all(n).iter().all(|&e| e)
    }

    /// The verdict the realizability loop reaches when every check is
    /// decided exactly: `Some((true, n))` for realizable at `n`,
    /// `Some((false, n))` for unrealizable at `n`, `None` past `max_depth`.
    pub fn algorithm_verdict(&self, max_depth: usize) -> Option<(bool, usize)> {
        if !self.init.iter().any(|&b| b) {
            return Some((false, 0));
        }
        for n in 0..=max_depth {
            if !self.base_check_simplified(n) {
                return Some((false, n));
            }
            if self.extend_check(n) {
                return Some((true, n));
            }
        }
        None
    }
}

/// The viable states of `contract` over `dom`.
pub fn enumerate_viable(contract: &TypedContract, dom: &DomainSpec) -> Result<Vec<Valuation>, OracleError> {
    Ok(Oracle::new(contract, dom)?.viable_states())
}

/// Exact realizability over `dom`.
pub fn oracle_realizable(contract: &TypedContract, dom: &DomainSpec) -> Result<bool, OracleError> {
    Ok(Oracle::new(contract, dom)?.realizable())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::load_contract;
    use crate::eval::Value;

    const EX1: &str = "input i:int; state s:int; assume true; init true; trans s <> 0;";
    const EX2: &str = "input i:int; state s:int; init s >= 0; trans s' = s - 1 and s' >= 0;";

    fn dom(lo: i64, hi: i64) -> DomainSpec {
        DomainSpec::new().int("s", lo, hi).int("i", 0, 0)
    }

    fn ints(states: &[Valuation]) -> Vec<i64> {
        states
            .iter()
            .map(|v| match v.get("s") {
                Some(Value::Int(n)) => i64::try_from(n).unwrap(),
                other => panic!("{other:?}"),
            })
            .collect()
    }

    #[test]
    fn example_one() {
        let c = load_contract(EX1).unwrap();
        assert_eq!(ints(&enumerate_viable(&c, &dom(-2, 2)).unwrap()), [-2, -1, 1, 2]);
        assert!(oracle_realizable(&c, &dom(-2, 2)).unwrap());
        let o = Oracle::new(&c, &dom(-2, 2)).unwrap();
        for n in 0..5 {
            assert!(!o.base_check_simplified(n));
            assert!(o.base_check(n));
        }
    }

    #[test]
    fn example_two() {
        let c = load_contract(EX2).unwrap();
        assert!(enumerate_viable(&c, &dom(-1, 3)).unwrap().is_empty());
        assert!(!oracle_realizable(&c, &dom(-1, 3)).unwrap());
        let o = Oracle::new(&c, &dom(0, 5)).unwrap();
        for n in 0..=4 {
            assert!(o.base_check(n), "n={n}");
            let s = o.state_index(&Valuation::new().with("s", Value::int(n as i64))).unwrap();
            assert!(o.viable_n(s, n));
        }
        assert!(!o.base_check_simplified(0));
        let zero = o.state_index(&Valuation::new().with("s", Value::int(0))).unwrap();
        assert!(o.viable_n(zero, 0));
        assert!(!o.viable_n(zero, 1));
    }

    #[test]
    fn unconstrained_transition() {
        let c = load_contract("input i:int; state s:int; init s = 0;").unwrap();
        let o = Oracle::new(&c, &dom(-1, 1)).unwrap();
        assert_eq!(o.viable_states().len(), 3);
        for n in 0..4 {
            assert!(o.base_check(n) && o.base_check_simplified(n) && o.extend_check(n));
        }
        assert_eq!(o.algorithm_verdict(5), Some((true, 0)));
    }

    #[test]
    fn empty_initial() {
        let c = load_contract("state s:int; init false;").unwrap();
        assert!(!oracle_realizable(&c, &DomainSpec::new().int("s", 0, 3)).unwrap());
    }

    #[test]
    fn input_free_contract_has_one_input() {
        let c = load_contract("state b: bool; trans b' <> b;").unwrap();
        let o = Oracle::new(&c, &DomainSpec::new()).unwrap();
        assert_eq!((o.num_states(), o.num_inputs()), (2, 1));
        assert!(o.realizable());
    }

    #[test]
    fn evaluation_errors_surface() {
        let c = load_contract("state s:int; trans s' = 1 div s;").unwrap();
        assert!(matches!(
            Oracle::new(&c, &DomainSpec::new().int("s", 0, 1)),
            Err(OracleError::Eval(_))
        ));
    }
}
