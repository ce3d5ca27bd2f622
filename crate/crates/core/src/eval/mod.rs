//! Concrete semantics: values, valuations, expression evaluation, traces and
//! trace replay.

mod trace;
mod value;

pub use trace::{replay_trace, Condition, ReplayFailure, ReplayPoint, ReplayVerdict, Trace, TraceStep};
pub use value::{Role, Valuation, Value};

use std::fmt::Display;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::contract::{BinOp, Node, Term, UnOp, VarKind, VarRef};
use crate::error::EvalError;

/// Supplies values for the variables of a term.
pub trait Env<V> {
    fn lookup(&self, var: &V) -> Option<&Value>;
}

/// Environment for contract terms: the pre-state, the input, and the
/// post-state (primed variables). Any part may be absent when the term does
/// not need it.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepEnv<'a> {
    pub state: Option<&'a Valuation>,
    pub input: Option<&'a Valuation>,
    pub next: Option<&'a Valuation>,
}

impl<'a> StepEnv<'a> {
    pub fn state(state: &'a Valuation) -> Self {
        StepEnv { state: Some(state), ..Default::default() }
    }

    pub fn step(state: &'a Valuation, input: &'a Valuation) -> Self {
        StepEnv { state: Some(state), input: Some(input), next: None }
    }

    pub fn transition(state: &'a Valuation, input: &'a Valuation, next: &'a Valuation) -> Self {
        StepEnv { state: Some(state), input: Some(input), next: Some(next) }
    }
}

impl Env<VarRef> for StepEnv<'_> {
    fn lookup(&self, var: &VarRef) -> Option<&Value> {
        let source = match (var.kind, var.primed) {
            (VarKind::Input, _) => self.input,
            (VarKind::State, false) => self.state,
            (VarKind::State, true) => self.next,
        };
        source.and_then(|v| v.get(&var.name))
    }
}

/// Integer division as in SMT-LIB: `a = b * q + r` with `0 <= r < |b|`.
pub fn euclid_div(a: &BigInt, b: &BigInt) -> Result<BigInt, EvalError> {
    let r = euclid_mod(a, b)?;
    Ok((a - r) / b)
}

/// Remainder matching [`euclid_div`]; never negative.
pub fn euclid_mod(a: &BigInt, b: &BigInt) -> Result<BigInt, EvalError> {
    if b.is_zero() {
        return Err(EvalError::DivisionByZero);
    }
    Ok(a.mod_floor(&b.abs()))
}

/// Evaluates a typechecked term under `env`.
pub fn eval_expr<V: Display, E: Env<V>>(term: &Term<V>, env: &E) -> Result<Value, EvalError> {
    Ok(match &term.node {
        Node::Lit(l) => Value::from(l),
        Node::Var(v) => {
            let value = env.lookup(v).ok_or_else(|| EvalError::MissingBinding(v.to_string()))?;
            if value.sort() != term.sort {
                return Err(EvalError::SortMismatch(v.to_string()));
            }
            value.clone()
        }
        Node::Unary(op, e) => match (op, eval_expr(e, env)?) {
            (UnOp::Not, Value::Bool(b)) => Value::Bool(!b),
            (UnOp::Neg, Value::Int(v)) => Value::Int(-v),
            (UnOp::Neg, Value::Real(v)) => Value::Real(-v),
            (UnOp::ToReal, Value::Int(v)) => Value::Real(BigRational::from_integer(v)),
            (_, v) => return Err(EvalError::SortMismatch(format!("{v}"))),
        },
        Node::Binary(op, a, b) => binary(*op, eval_expr(a, env)?, eval_expr(b, env)?)?,
        Node::Ite(c, t, e) => {
            let c = eval_expr(c, env)?;
            let t = eval_expr(t, env)?;
            let e = eval_expr(e, env)?;
            match c {
                Value::Bool(true) => t,
                Value::Bool(false) => e,
                v => return Err(EvalError::SortMismatch(format!("{v}"))),
            }
        }
        Node::And(parts) => {
            let mut all = true;
            for p in parts {
                match eval_expr(p, env)? {
                    Value::Bool(b) => all &= b,
                    v => return Err(EvalError::SortMismatch(format!("{v}"))),
                }
            }
            Value::Bool(all)
        }
    })
}

/// Evaluates a boolean term.
pub fn eval_bool<V: Display, E: Env<V>>(term: &Term<V>, env: &E) -> Result<bool, EvalError> {
    match eval_expr(term, env)? {
        Value::Bool(b) => Ok(b),
        v => Err(EvalError::SortMismatch(format!("{v}"))),
    }
}

fn binary(op: BinOp, a: Value, b: Value) -> Result<Value, EvalError> {
    use Value::*;
    let mismatch = |a: &Value, b: &Value| EvalError::SortMismatch(format!("{a} {} {b}", op.symbol()));
    Ok(match op {
        BinOp::And | BinOp::Or | BinOp::Implies => match (&a, &b) {
            (Bool(x), Bool(y)) => Bool(match op {
                BinOp::And => *x && *y,
                BinOp::Or => *x || *y,
                _ => !*x || *y,
            }),
            _ => return Err(mismatch(&a, &b)),
        },
        BinOp::Eq | BinOp::Ne => {
            if a.sort() != b.sort() {
                return Err(mismatch(&a, &b));
            }
            Bool((a == b) == (op == BinOp::Eq))
        }
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let ord = match (&a, &b) {
                (Int(x), Int(y)) => x.cmp(y),
                (Real(x), Real(y)) => x.cmp(y),
                _ => return Err(mismatch(&a, &b)),
            };
            Bool(match op {
                BinOp::Lt => ord.is_lt(),
                BinOp::Le => ord.is_le(),
                BinOp::Gt => ord.is_gt(),
                _ => ord.is_ge(),
            })
        }
        BinOp::Add | BinOp::Sub | BinOp::Mul => match (&a, &b) {
            (Int(x), Int(y)) => Int(match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                _ => x * y,
            }),
            (Real(x), Real(y)) => Real(match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                _ => x * y,
            }),
            _ => return Err(mismatch(&a, &b)),
        },
        BinOp::Div | BinOp::Mod => match (&a, &b) {
            (Int(x), Int(y)) => Int(if op == BinOp::Div { euclid_div(x, y)? } else { euclid_mod(x, y)? }),
            _ => return Err(mismatch(&a, &b)),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::load_contract;
    use proptest::prelude::*;

    fn ex(src: &str) -> crate::contract::TypedContract {
        load_contract(src).unwrap()
    }

    #[test]
    fn example_one_zero_state_has_no_transition() {
        let c = ex("input i:int; state s:int; trans s <> 0;");
        let s = Valuation::new().with("s", Value::int(0));
        let i = Valuation::new().with("i", Value::int(0));
        let next = Valuation::new().with("s", Value::int(5));
        let env = StepEnv::transition(&s, &i, &next);
        assert_eq!(eval_expr(&c.transition, &env).unwrap(), Value::Bool(false));
    }

    #[test]
    fn example_two_transition() {
        let c = ex("input i:int; state s:int; init s >= 0; trans s' = s - 1 and s' >= 0;");
        let s = Valuation::new().with("s", Value::int(3));
        let i = Valuation::new().with("i", Value::int(0));
        let next = Valuation::new().with("s", Value::int(2));
        assert!(eval_bool(&c.transition, &StepEnv::transition(&s, &i, &next)).unwrap());
    }

    #[test]
    fn missing_binding_and_zero_divisor() {
        let c = ex("state s:int; input d:int; trans s' = s div d;");
        let s = Valuation::new().with("s", Value::int(3));
        let d = Valuation::new().with("d", Value::int(0));
        let next = Valuation::new().with("s", Value::int(0));
        assert_eq!(
            eval_expr(&c.transition, &StepEnv::transition(&s, &d, &next)),
            Err(EvalError::DivisionByZero)
        );
        assert!(matches!(
            eval_expr(&c.transition, &StepEnv::step(&s, &d)),
            Err(EvalError::MissingBinding(name)) if name == "s'"
        ));
    }

    #[test]
    fn reals_are_exact() {
        let c = ex("state r:real; trans r' = r + 0.1 + 0.2;");
        let s = Valuation::new().with("r", Value::real(0, 1));
        let next = Valuation::new().with("r", Value::real(3, 10));
        let none = Valuation::new();
        assert!(eval_bool(&c.transition, &StepEnv::transition(&s, &none, &next)).unwrap());
    }

    /// Brute-force witness search for `a = b*q + r, 0 <= r < |b|`.
    fn smtlib_divmod_oracle(a: i64, b: i64) -> (i64, i64) {
        for r in 0..b.abs() {
            if (a - r) % b == 0 {
                return ((a - r) / b, r);
            }
        }
        unreachable!()
    }

    #[test]
    fn euclidean_division_table() {
        for a in -9..=9 {
            for b in [-4i64, -3, -1, 1, 2, 5] {
                let (q, r) = smtlib_divmod_oracle(a, b);
                let (ba, bb) = (BigInt::from(a), BigInt::from(b));
                assert_eq!(euclid_div(&ba, &bb).unwrap(), BigInt::from(q), "{a} div {b}");
                assert_eq!(euclid_mod(&ba, &bb).unwrap(), BigInt::from(r), "{a} mod {b}");
            }
        }
    }

    proptest! {
        #[test]
        fn adding_zero_is_identity(v in any::<i64>()) {
            let c = ex("state x:int; trans x' = x + 0;");
            let term = match &c.transition.node {
                Node::Binary(_, _, rhs) => rhs.as_ref().clone(),
                _ => unreachable!(),
            };
            let s = Valuation::new().with("x", Value::int(v));
            prop_assert_eq!(eval_expr(&term, &StepEnv::state(&s)).unwrap(), Value::int(v));
        }

        #[test]
        fn divmod_reconstructs(a in any::<i64>(), b in any::<i64>().prop_filter("nonzero", |b| *b != 0)) {
            let (ba, bb) = (BigInt::from(a), BigInt::from(b));
            let q = euclid_div(&ba, &bb).unwrap();
            let r = euclid_mod(&ba, &bb).unwrap();
            prop_assert_eq!(&bb * q + &r, ba);
            prop_assert!(!r.is_negative() && r < bb.abs());
        }
    }
}
