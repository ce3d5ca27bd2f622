//! Exhaustive checks of the facts the algorithm's correctness rests on.

use super::Oracle;

/// Depth bound for the monotonicity checks.
pub const MONOTONE_DEPTH: usize = 4;
/// Depth bound for the shift, step-up and one-way soundness checks.
pub const STEP_DEPTH: usize = 3;
/// Largest number of non-viable states for which every superset of the
/// viable set is tried as a fixpoint.
const SUPERSET_LIMIT: usize = 10;

/// A failed property, with the first counterexample found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub property: &'static str,
    pub detail: String,
}

fn violation(property: &'static str, detail: String) -> Violation {
    Violation { property, detail }
}

/// The viable set is a fixpoint, and no larger set is.
pub fn check_fixpoint(o: &Oracle) -> Vec<Violation> {
    let mut out = Vec::new();
    let v = o.viable();
    if o.step_operator(&v) != v {
        out.push(violation("fixpoint", "viable set is not a fixpoint".into()));
    }
    let attractor = o.attractor();
    if let Err(e) = attractor.check_ranks(o) {
        out.push(violation("fixpoint", format!("attractor ranks invalid: {e}")));
    }
    for s in 0..o.num_states() {
        if attractor.covers(s) == v[s] {
            out.push(violation("fixpoint", format!("state {} is in both or neither of viable and attractor", o.state(s))));
            break;
        }
    }
    let outside: Vec<usize> = (0..o.num_states()).filter(|&s| !v[s]).collect();
    if outside.len() <= SUPERSET_LIMIT {
        for mask in 1u32..(1 << outside.len()) {
            let mut w = v.clone();
            for (bit, &s) in outside.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    w[s] = true;
                }
            }
            if o.step_operator(&w) == w {
                out.push(violation("fixpoint", "a strict superset of the viable set is a fixpoint".into()));
                break;
            }
        }
    }
    out
}

/// `Viable ⇒ Viable_n` and `Viable_{n+1} ⇒ Viable_n` for `n ≤ MONOTONE_DEPTH`.
pub fn check_monotonicity(o: &Oracle) -> Vec<Violation> {
    let mut out = Vec::new();
    let v = o.viable();
    for n in 0..=MONOTONE_DEPTH {
        let (vn, vn1) = (o.viable_n_all(n), o.viable_n_all(n + 1));
        for s in 0..o.num_states() {
            if v[s] && !vn[s] {
                out.push(violation("viable implies viable_n", format!("n={n}, s={}", o.state(s))));
            }
            if vn1[s] && !vn[s] {
                out.push(violation("viable_n+1 implies viable_n", format!("n={n}, s={}", o.state(s))));
            }
        }
    }
    out
}

/// `Extend_n(s) ∧ Viable_n(s) ∧ A(s,i) ⇒ ∃s'. G_T(s,i,s') ∧ Viable_n(s')`.
pub fn check_shift(o: &Oracle) -> Vec<Violation> {
    let mut out = Vec::new();
    for n in 0..=STEP_DEPTH {
        let (e, v) = (o.extend_n_all(n), o.viable_n_all(n));
        for s in (0..o.num_states()).filter(|&s| e[s] && v[s]) {
            for i in (0..o.num_inputs()).filter(|&i| o.assumes(s, i)) {
                if !o.successors(s, i).iter().any(|&t| v[t as usize]) {
                    out.push(violation("shift", format!("n={n}, s={}, i={}", o.state(s), o.input(i))));
                }
            }
        }
    }
    out
}

/// `Extend_n(s) ∧ Viable_n(s) ⇒ Viable_{n+1}(s)`.
pub fn check_step_up(o: &Oracle) -> Vec<Violation> {
    let mut out = Vec::new();
    for n in 0..=STEP_DEPTH {
        let (e, v, v1) = (o.extend_n_all(n), o.viable_n_all(n), o.viable_n_all(n + 1));
        for s in 0..o.num_states() {
            if e[s] && v[s] && !v1[s] {
                out.push(violation("step-up", format!("n={n}, s={}", o.state(s))));
            }
        }
    }
    out
}

/// `(∃s. G_I(s)) ∧ (∀k ≤ n. BaseCheck′(k)) ⇒ BaseCheck(n)`.
pub fn check_one_way_soundness(o: &Oracle) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(0..o.num_states()).any(|s| o.initial(s)) {
        return out;
    }
    for n in 0..=STEP_DEPTH {
        if (0..=n).all(|k| o.base_check_simplified(k)) && !o.base_check(n) {
            out.push(violation("simplified base check soundness", format!("n={n}")));
        }
    }
    out
}

/// Realizable exactly when a synthesized system passes the realization
/// audit; unrealizable exactly when a refutation certificate checks.
pub fn check_realizability_characterization(o: &Oracle) -> Vec<Violation> {
    let mut out = Vec::new();
    if o.realizable() {
        match o.synthesize_realization() {
            Ok(t) => {
                if let Err(e) = t.audit(o) {
                    out.push(violation("realization audit", e));
                }
            }
            Err(e) => out.push(violation("realization audit", e.to_string())),
        }
        if o.refutation().is_some() {
            out.push(violation("refutation", "realizable contract has a refutation".into()));
        }
    } else {
        match o.refutation() {
            Some(r) => {
                if let Err(e) = r.check(o) {
                    out.push(violation("refutation", e));
                }
            }
            None => out.push(violation("refutation", "unrealizable contract has no refutation".into())),
        }
        if o.synthesize_realization().is_ok() {
            out.push(violation("realization audit", "unrealizable contract was synthesized".into()));
        }
    }
    out
}

/// Every property above.
pub fn check_all(o: &Oracle) -> Vec<Violation> {
    let mut out = check_fixpoint(o);
    out.extend(check_monotonicity(o));
    out.extend(check_shift(o));
    out.extend(check_step_up(o));
    out.extend(check_one_way_soundness(o));
    out.extend(check_realizability_characterization(o));
    out
}
