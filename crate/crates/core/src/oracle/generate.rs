//! Seeded random contracts over bool and bounded int variables.
//!
//! Range constraints are part of the generated contract: the assumption bounds
//! the current state and the input, the initial guarantee bounds the state,
//! and the transition guarantee bounds the next state. Out-of-range states are
//! then never reachable and vacuously fine, so the contract means the same
//! over unbounded integers as over the finite domain.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DomainSpec;
use crate::contract::{typecheck, BinOp, Contract, Expr, Sort, TypedContract, UnOp, VarDecl, VarKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneratorParams {
    pub num_state: usize,
    pub num_input: usize,
    /// Inclusive bounds of every int variable.
    pub int_range: (i64, i64),
    pub expr_depth: usize,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams { num_state: 2, num_input: 1, int_range: (-2, 2), expr_depth: 2 }
    }
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    params: &'a GeneratorParams,
}

#[derive(Clone)]
struct ScopeVar {
    name: String,
    primed: bool,
    sort: Sort,
}

impl ScopeVar {
    fn expr(&self) -> Expr {
        Expr::Var { name: self.name.clone(), primed: self.primed }
    }
}

const COMPARISONS: [BinOp; 6] = [BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge];

impl Gen<'_> {
    fn constant(&mut self) -> Expr {
        let (lo, hi) = self.params.int_range;
        Expr::int(self.rng.gen_range(lo..=hi))
    }

    fn int_term(&mut self, scope: &[ScopeVar]) -> Expr {
        let ints: Vec<&ScopeVar> = scope.iter().filter(|v| v.sort == Sort::Int).collect();
        if ints.is_empty() {
            return self.constant();
        }
        let v = ints.choose(&mut self.rng).expect("non-empty").expr();
        match self.rng.gen_range(0..10) {
            0..=3 => v,
            4..=5 => {
                let k = Expr::int(self.rng.gen_range(1..=2));
                let op = if self.rng.gen_bool(0.5) { BinOp::Add } else { BinOp::Sub };
                Expr::bin(op, v, k)
            }
            6..=7 => {
                let w = ints.choose(&mut self.rng).expect("non-empty").expr();
                let op = if self.rng.gen_bool(0.5) { BinOp::Add } else { BinOp::Sub };
                Expr::bin(op, v, w)
            }
            8 => Expr::bin(BinOp::Mod, v, Expr::int(2)),
            _ => Expr::Unary(UnOp::Neg, Box::new(v)),
        }
    }

    fn atom(&mut self, scope: &[ScopeVar]) -> Expr {
        let bools: Vec<&ScopeVar> = scope.iter().filter(|v| v.sort == Sort::Bool).collect();
        if !bools.is_empty() && self.rng.gen_bool(0.3) {
            let b = bools.choose(&mut self.rng).expect("non-empty").expr();
            return if self.rng.gen_bool(0.3) { Expr::not(b) } else { b };
        }
        let op = *COMPARISONS.choose(&mut self.rng).expect("non-empty");
        let lhs = self.int_term(scope);
        let rhs = if self.rng.gen_bool(0.5) { self.constant() } else { self.int_term(scope) };
        Expr::bin(op, lhs, rhs)
    }

    fn formula(&mut self, scope: &[ScopeVar], depth: usize) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.3) {
            return self.atom(scope);
        }
        match self.rng.gen_range(0..10) {
            0..=3 => Expr::and(self.formula(scope, depth - 1), self.formula(scope, depth - 1)),
            4..=6 => Expr::bin(BinOp::Or, self.formula(scope, depth - 1), self.formula(scope, depth - 1)),
            7..=8 => Expr::bin(BinOp::Implies, self.formula(scope, depth - 1), self.formula(scope, depth - 1)),
            _ => Expr::not(self.formula(scope, depth - 1)),
        }
    }

    /// A formula that mentions at least one variable satisfying `must`, when
    /// the scope has one; retries a few times before settling.
    fn formula_using(&mut self, scope: &[ScopeVar], must: impl Fn(&ScopeVar) -> bool) -> Expr {
        let depth = self.params.expr_depth;
        let mut e = self.formula(scope, depth);
        if !scope.iter().any(&must) {
            return e;
        }
        for _ in 0..8 {
            let mut used = false;
            e.for_each_var(&mut |name, primed| {
                used |= scope.iter().any(|v| v.name == name && v.primed == primed && must(v));
            });
            if used {
                break;
            }
            e = self.formula(scope, depth);
        }
        e
    }
}

fn ranges(vars: &[ScopeVar], (lo, hi): (i64, i64)) -> Vec<Expr> {
    vars.iter()
        .filter(|v| v.sort == Sort::Int)
        .map(|v| Expr::and(Expr::bin(BinOp::Le, Expr::int(lo), v.expr()), Expr::bin(BinOp::Le, v.expr(), Expr::int(hi))))
        .collect()
}

fn conj(parts: Vec<Expr>) -> Expr {
    parts.into_iter().reduce(Expr::and).unwrap_or_else(Expr::tt)
}

/// A contract and matching finite domain, determined entirely by `seed`.
pub fn random_contract(seed: u64, params: &GeneratorParams) -> (TypedContract, DomainSpec) {
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed), params };
    let mut decls = Vec::new();
    let sort = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.75) { Sort::Int } else { Sort::Bool };
    for k in 0..params.num_input {
        decls.push(VarDecl::new(format!("i{k}"), sort(&mut g.rng), VarKind::Input));
    }
    for k in 0..params.num_state {
        decls.push(VarDecl::new(format!("s{k}"), sort(&mut g.rng), VarKind::State));
    }
    let scope = |kind: VarKind, primed: bool| -> Vec<ScopeVar> {
        decls
            .iter()
            .filter(|d| d.kind == kind)
            .map(|d| ScopeVar { name: d.name.clone(), primed, sort: d.sort })
            .collect()
    };
    let (cur, inp, next) = (scope(VarKind::State, false), scope(VarKind::Input, false), scope(VarKind::State, true));
    let range = params.int_range;

    let mut assume = ranges(&cur, range);
    assume.extend(ranges(&inp, range));
    if g.rng.gen_bool(0.4) {
        let s: Vec<ScopeVar> = cur.iter().chain(&inp).cloned().collect();
        assume.push(g.formula_using(&s, |v| !v.primed));
    }

    let mut initial = ranges(&cur, range);
    if g.rng.gen_bool(0.6) {
        initial.push(g.formula_using(&cur, |_| true));
    }

    let mut transition = ranges(&next, range);
    let all: Vec<ScopeVar> = cur.iter().chain(&inp).chain(&next).cloned().collect();
    for _ in 0..g.rng.gen_range(1..=2) {
        transition.push(g.formula_using(&all, |v| v.primed));
    }

    let contract = Contract { decls, assumption: conj(assume), initial: conj(initial), transition: conj(transition) };
    let typed = typecheck(&contract).expect("generated contracts are well-typed");
    let mut dom = DomainSpec::new();
    for d in typed.decls() {
        dom = match d.sort {
            Sort::Int => dom.int(d.name.clone(), range.0, range.1),
            _ => dom.boolean(d.name.clone()),
        };
    }
    (typed, dom)
}

#[cfg(test)]
mod tests {
    use super::super::Oracle;
    use super::*;

    #[test]
    fn deterministic() {
        let p = GeneratorParams::default();
        let (a, da) = random_contract(1, &p);
        let (b, db) = random_contract(1, &p);
        assert_eq!(a.source, b.source);
        assert_eq!(da, db);
        assert_ne!(random_contract(2, &p).0.source, a.source);
    }

    #[test]
    fn corpus_typechecks_and_prints() {
        let p = GeneratorParams::default();
        for seed in 0..500 {
            let (c, dom) = random_contract(seed, &p);
            let text = c.source.to_string();
            let again = crate::contract::load_contract(&text).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{text}"));
            assert_eq!(again.source, c.source, "seed {seed}");
            Oracle::new(&c, &dom).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        }
    }

    #[test]
    fn both_classes_are_common() {
        let p = GeneratorParams::default();
        let n = 500;
        let realizable = (0..n)
            .filter(|&seed| {
                let (c, dom) = random_contract(seed, &p);
                Oracle::new(&c, &dom).unwrap().realizable()
            })
            .count();
        assert!(realizable * 10 >= n as usize, "only {realizable} of {n} realizable");
        assert!((n as usize - realizable) * 10 >= n as usize, "only {} of {n} unrealizable", n as usize - realizable);
    }
}
