//! Unrolls a contract into closed one-alternation queries.
//!
//! States are indexed `0..=n` and inputs `1..=n+1`; step `k` relates state
//! `k-1`, input `k` and state `k`. Input `n+1` is the fresh witness input of the
//! stuck-tail, and `post` indexes the universally quantified successor state.
//! Every query is the negation of a check: SAT means the check fails.

use std::collections::BTreeMap;
use std::fmt;

use crate::contract::{Sort, Term, TypedContract, VarDecl, VarKind, VarRef};
use crate::eval::Valuation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepIndex {
    At(usize),
    Post,
}

impl fmt::Display for StepIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepIndex::At(k) => write!(f, "{k}"),
            StepIndex::Post => f.write_str("post"),
        }
    }
}

/// A contract variable at a given unrolling step, rendered `name$k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StepVar {
    pub name: String,
    pub index: StepIndex,
}

impl StepVar {
    pub fn at(name: impl Into<String>, k: usize) -> Self {
        StepVar { name: name.into(), index: StepIndex::At(k) }
    }

    pub fn post(name: impl Into<String>) -> Self {
        StepVar { name: name.into(), index: StepIndex::Post }
    }
}

impl fmt::Display for StepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}${}", self.name, self.index)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Symbol {
    pub sort: Sort,
    pub kind: VarKind,
}

pub type SymbolTable = BTreeMap<StepVar, Symbol>;

/// What a query decides.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QueryKind {
    /// `exists s. G_I(s)`.
    InitialSat,
    /// Negated simplified base check at depth n.
    Base(usize),
    /// Negated extend check at depth n.
    Extend(usize),
    /// Existence of a transition-guarantee successor for a fixed state and input.
    Successor,
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryKind::InitialSat => f.write_str("initial"),
            QueryKind::Base(n) => write!(f, "base_{n}"),
            QueryKind::Extend(n) => write!(f, "extend_{n}"),
            QueryKind::Successor => f.write_str("successor"),
        }
    }
}

/// `forall vars. not body`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UniversalTail {
    pub vars: Vec<StepVar>,
    pub body: Term<StepVar>,
}

/// `exists exists. (and matrix...) and forall tail.vars. not tail.body`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryFormula {
    pub kind: QueryKind,
    pub exists: Vec<StepVar>,
    /// Conjuncts of the quantifier-free part.
    pub matrix: Vec<Term<StepVar>>,
    pub tail: Option<UniversalTail>,
    pub symbols: SymbolTable,
}

impl QueryFormula {
    /// Prunes literal-`true` conjuncts everywhere. Off unless asked for.
    pub fn simplified(&self) -> QueryFormula {
        let matrix: Vec<_> = self
            .matrix
            .iter()
            .map(Term::simplify)
            .filter(|t| !t.is_true())
            .collect();
        QueryFormula {
            kind: self.kind,
            exists: self.exists.clone(),
            matrix,
            tail: self
                .tail
                .as_ref()
                .map(|t| UniversalTail { vars: t.vars.clone(), body: t.body.simplify() }),
            symbols: self.symbols.clone(),
        }
    }

    pub fn sort_of(&self, var: &StepVar) -> Option<Sort> {
        self.symbols.get(var).map(|s| s.sort)
    }
}

/// Instantiates a contract term at a step: unprimed state at `state`, input at
/// `input`, primed state at `next`.
pub fn instantiate(term: &Term<VarRef>, state: usize, input: usize, next: StepIndex) -> Term<StepVar> {
    term.substitute(&mut |v: &VarRef, sort| {
        let index = match (v.kind, v.primed) {
            (VarKind::Input, _) => StepIndex::At(input),
            (VarKind::State, false) => StepIndex::At(state),
            (VarKind::State, true) => next,
        };
        Term::var(StepVar { name: v.name.clone(), index }, sort)
    })
}

/// `A(s_{k-1}, i_k)` and `G_T(s_{k-1}, i_k, s_k)` for step `k >= 1`.
pub fn step_conjuncts(contract: &TypedContract, k: usize) -> [Term<StepVar>; 2] {
    [
        instantiate(&contract.assumption, k - 1, k, StepIndex::At(k)),
        instantiate(&contract.transition, k - 1, k, StepIndex::At(k)),
    ]
}

/// Conjunction of the first `n` steps; the constant `true` when `n = 0`.
pub fn build_path_constraint(contract: &TypedContract, n: usize) -> Term<StepVar> {
    Term::conj((1..=n).flat_map(|k| step_conjuncts(contract, k)).collect())
}

struct Symbols<'a> {
    decls: &'a [VarDecl],
    exists: Vec<StepVar>,
    table: SymbolTable,
}

impl<'a> Symbols<'a> {
    fn new(decls: &'a [VarDecl]) -> Self {
        Symbols { decls, exists: Vec::new(), table: SymbolTable::new() }
    }

    fn add(&mut self, kind: VarKind, index: StepIndex) -> Vec<StepVar> {
        let mut added = Vec::new();
        for d in self.decls.iter().filter(|d| d.kind == kind) {
            let v = StepVar { name: d.name.clone(), index };
            self.table.insert(v.clone(), Symbol { sort: d.sort, kind });
            added.push(v);
        }
        added
    }

    fn exists(&mut self, kind: VarKind, k: usize) {
        let added = self.add(kind, StepIndex::At(k));
        self.exists.extend(added);
    }
}

/// Symbols for states `0..=n` and inputs `1..=n+1`, in declaration order.
pub(crate) fn depth_symbols(decls: &[VarDecl], n: usize) -> (Vec<StepVar>, SymbolTable) {
    let mut syms = Symbols::new(decls);
    syms.exists(VarKind::State, 0);
    for k in 1..=n {
        syms.exists(VarKind::Input, k);
        syms.exists(VarKind::State, k);
    }
    syms.exists(VarKind::Input, n + 1);
    (syms.exists, syms.table)
}

fn stuck_tail(contract: &TypedContract, n: usize, table: &mut SymbolTable) -> UniversalTail {
    let mut syms = Symbols::new(contract.decls());
    let vars = syms.add(VarKind::State, StepIndex::Post);
    table.extend(syms.table);
    UniversalTail { vars, body: instantiate(&contract.transition, n, n + 1, StepIndex::Post) }
}

/// Negation of `ExtendCheck(n)`: some valid `n`-step path ends in a state that
/// has no transition-guarantee successor for some valid input.
pub fn build_extend_negation(contract: &TypedContract, n: usize) -> QueryFormula {
    let (exists, mut symbols) = depth_symbols(contract.decls(), n);
    let matrix = vec![
        build_path_constraint(contract, n),
        instantiate(&contract.assumption, n, n + 1, StepIndex::At(n + 1)),
    ];
    let tail = stuck_tail(contract, n, &mut symbols);
    QueryFormula { kind: QueryKind::Extend(n), exists, matrix, tail: Some(tail), symbols }
}

/// Negation of the simplified base check at depth `n`: the extend negation
/// with the path anchored in an initial state.
pub fn build_base_negation(contract: &TypedContract, n: usize) -> QueryFormula {
    let mut q = build_extend_negation(contract, n);
    q.kind = QueryKind::Base(n);
    q.matrix.push(initial_at_zero(contract));
    q
}

pub(crate) fn initial_at_zero(contract: &TypedContract) -> Term<StepVar> {
    instantiate(&contract.initial, 0, 0, StepIndex::At(0))
}

/// `exists s. G_I(s)`, with no universal tail.
pub fn build_initial_sat(contract: &TypedContract) -> QueryFormula {
    let mut syms = Symbols::new(contract.decls());
    syms.exists(VarKind::State, 0);
    QueryFormula {
        kind: QueryKind::InitialSat,
        exists: syms.exists,
        matrix: vec![initial_at_zero(contract)],
        tail: None,
        symbols: syms.table,
    }
}

/// `exists s'. G_T(state, input, s')` with `state` and `input` fixed to
/// literals. UNSAT confirms the pair is stuck.
pub fn build_successor_query(contract: &TypedContract, state: &Valuation, input: &Valuation) -> QueryFormula {
    let mut syms = Symbols::new(contract.decls());
    let exists = syms.add(VarKind::State, StepIndex::Post);
    let body = contract.transition.substitute(&mut |v: &VarRef, sort| {
        let fixed = match (v.kind, v.primed) {
            (VarKind::State, true) => return Term::var(StepVar::post(v.name.clone()), sort),
            (VarKind::State, false) => state.get(&v.name),
            (VarKind::Input, _) => input.get(&v.name),
        };
        let value = fixed.unwrap_or_else(|| panic!("trace does not bind `{}`", v.name));
        Term::lit(value.to_literal())
    });
    QueryFormula {
        kind: QueryKind::Successor,
        exists,
        matrix: vec![body],
        tail: None,
        symbols: syms.table,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::load_contract;

    const EX1: &str = "input i:int; state s:int; assume true; init true; trans s <> 0;";
    const EX2: &str = "input i:int; state s:int; init s >= 0; trans s' = s - 1 and s' >= 0;";
    const COUNTER: &str = "state x:int; init x = 0; trans x' = x + 1 and x >= 0;";

    #[test]
    fn path_constraint_shapes() {
        let ex1 = load_contract(EX1).unwrap();
        let ex2 = load_contract(EX2).unwrap();
        assert!(build_path_constraint(&ex1, 0).is_true());
        assert_eq!(
            build_path_constraint(&ex2, 1).to_string(),
            "(true and ((s$1 = (s$0 - 1)) and (s$1 >= 0)))"
        );
        assert_eq!(
            build_path_constraint(&ex1, 2).to_string(),
            "(true and (s$0 <> 0) and true and (s$1 <> 0))"
        );
    }

    #[test]
    fn extend_negation_example_one() {
        let c = load_contract(EX1).unwrap();
        let q = build_extend_negation(&c, 0);
        let names: Vec<String> = q.exists.iter().map(ToString::to_string).collect();
        assert_eq!(names, ["s$0", "i$1"]);
        let tail = q.tail.unwrap();
        assert_eq!(tail.vars, vec![StepVar::post("s")]);
        assert_eq!(tail.body.to_string(), "(s$0 <> 0)");
    }

    #[test]
    fn counter_extend_one_shape() {
        let c = load_contract(COUNTER).unwrap();
        let q = build_extend_negation(&c, 1);
        let names: Vec<String> = q.exists.iter().map(ToString::to_string).collect();
        assert_eq!(names, ["x$0", "x$1"]);
        assert_eq!(q.matrix[0].to_string(), "(true and ((x$1 = (x$0 + 1)) and (x$0 >= 0)))");
        assert_eq!(q.tail.unwrap().body.to_string(), "((x$post = (x$1 + 1)) and (x$1 >= 0))");
    }

    #[test]
    fn base_extends_extend_with_initial() {
        let c = load_contract(EX2).unwrap();
        for n in 0..4 {
            let base = build_base_negation(&c, n);
            let ext = build_extend_negation(&c, n);
            assert_eq!(&base.matrix[..ext.matrix.len()], &ext.matrix[..]);
            assert_eq!(base.matrix.len(), ext.matrix.len() + 1);
            assert_eq!(base.matrix.last().unwrap().to_string(), "(s$0 >= 0)");
            assert_eq!(base.exists, ext.exists);
            assert_eq!(base.tail, ext.tail);
        }
    }

    #[test]
    fn variable_counts() {
        let c = load_contract(
            "input a:int; input b:bool; state x:int; state y:real; state z:bool; trans x' = x;",
        )
        .unwrap();
        for n in 0..5 {
            for q in [build_base_negation(&c, n), build_extend_negation(&c, n)] {
                assert_eq!(q.exists.len(), (n + 1) * 3 + (n + 1) * 2);
                assert_eq!(q.tail.as_ref().unwrap().vars.len(), 3);
                assert_eq!(q.symbols.len(), q.exists.len() + 3);
            }
        }
    }

    #[test]
    fn no_input_contract() {
        let c = load_contract("state x:int; trans x' = x + 1;").unwrap();
        let q = build_extend_negation(&c, 2);
        assert!(q.exists.iter().all(|v| v.name == "x"));
        assert_eq!(q.exists.len(), 3);
    }

    #[test]
    fn initial_sat_has_no_tail() {
        let c = load_contract(EX2).unwrap();
        let q = build_initial_sat(&c);
        assert!(q.tail.is_none());
        assert_eq!(q.exists, vec![StepVar::at("s", 0)]);
    }

    #[test]
    fn deterministic() {
        let c = load_contract(EX2).unwrap();
        assert_eq!(build_base_negation(&c, 3), build_base_negation(&c, 3));
    }

    #[test]
    fn simplify_prunes_true() {
        let c = load_contract(EX1).unwrap();
        let q = build_extend_negation(&c, 2).simplified();
        assert_eq!(q.matrix.len(), 1);
        assert_eq!(q.matrix[0].to_string(), "((s$0 <> 0) and (s$1 <> 0))");
    }
}
