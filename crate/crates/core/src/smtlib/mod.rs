//! SMT-LIB 2 rendering, solver sessions and model parsing.

pub mod emit;
pub mod model;
pub mod session;
pub mod sexp;

pub use emit::emit_script;
pub use model::{parse_model, Assignment};
pub use session::{
    check_monolithic, existential_symbols, Fragment, Session, SessionKiller, SolverCommand, SolverVerdict, SOLVER_ENV,
};

use crate::contract::{Term, TypedContract, VarKind};
use crate::unroll::{
    depth_symbols, initial_at_zero, instantiate, step_conjuncts, QueryKind, StepIndex, StepVar, SymbolTable,
    UniversalTail,
};

/// The pieces of the depth-`n` query for an incremental session that already
/// holds depth `n - 1`.
#[derive(Clone, Debug)]
pub struct DepthQuery {
    pub kind: QueryKind,
    /// New declarations and the path increment, kept for later depths.
    pub base: Fragment,
    /// The per-depth part: the last assumption, the stuck tail and, for base
    /// queries, the initial guarantee.
    pub delta: Fragment,
    /// Existential symbols of the whole depth-`n` query.
    pub symbols: SymbolTable,
}

fn rendered(terms: Vec<Term<StepVar>>, simplify: bool) -> Vec<String> {
    terms
        .into_iter()
        .map(|t| if simplify { t.simplify() } else { t })
        .filter(|t| !simplify || !t.is_true())
        .map(|t| emit::term(&t))
        .collect()
}

/// Builds the incremental pieces of the base (`anchored`) or extend negation at
/// depth `n`. Asserting `base` for every depth up to `n` and then `delta` is
/// equivalent to the monolithic query of the same kind.
pub fn depth_query(contract: &TypedContract, n: usize, anchored: bool, simplify: bool) -> DepthQuery {
    let (exists, symbols) = depth_symbols(contract.decls(), n);
    let declarations = exists.iter().map(|v| (v.clone(), symbols[v].sort)).collect();
    let increment = if n == 0 { Vec::new() } else { step_conjuncts(contract, n).to_vec() };
    let mut delta_terms = vec![instantiate(&contract.assumption, n, n + 1, StepIndex::At(n + 1))];
    if anchored {
        delta_terms.push(initial_at_zero(contract));
    }
    let post: Vec<StepVar> = contract.states().map(|d| StepVar::post(d.name.clone())).collect();
    let body = instantiate(&contract.transition, n, n + 1, StepIndex::Post);
    let tail = UniversalTail { vars: post, body: if simplify { body.simplify() } else { body } };
    let mut delta = rendered(delta_terms, simplify);
    let post_sort = |v: &StepVar| {
        contract
            .decl(&v.name)
            .filter(|d| d.kind == VarKind::State)
            .map(|d| d.sort)
            .expect("post variable is a state")
    };
    delta.push(emit::tail(&tail, post_sort));
    DepthQuery {
        kind: if anchored { QueryKind::Base(n) } else { QueryKind::Extend(n) },
        base: Fragment { declarations, assertions: rendered(increment, simplify) },
        delta: Fragment { declarations: Vec::new(), assertions: delta },
        symbols,
    }
}
