//! Rendering of terms and queries as SMT-LIB 2 text.

use std::fmt::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use crate::contract::{BinOp, Literal, Node, Sort, Term, UnOp};
use crate::unroll::{QueryFormula, StepVar, UniversalTail};

pub fn sort_name(sort: Sort) -> &'static str {
    match sort {
        Sort::Bool => "Bool",
        Sort::Int => "Int",
        Sort::Real => "Real",
    }
}

fn int_literal(v: &BigInt) -> String {
    if v.is_negative() {
        format!("(- {})", v.abs())
    } else {
        v.to_string()
    }
}

/// `3.0`, `(/ 1.0 10.0)`, `(- (/ 3.0 2.0))`.
fn real_literal(v: &BigRational) -> String {
    let abs = v.abs();
    let body = if abs.denom().is_one() {
        format!("{}.0", abs.numer())
    } else {
        format!("(/ {}.0 {}.0)", abs.numer(), abs.denom())
    };
    if v.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

pub fn literal(lit: &Literal) -> String {
    match lit {
        Literal::Bool(b) => b.to_string(),
        Literal::Int(v) => int_literal(v),
        Literal::Real(v) => real_literal(v),
    }
}

fn op_name(op: BinOp) -> &'static str {
    match op {
        BinOp::And => "and",
        BinOp::Or => "or",
        BinOp::Implies => "=>",
        BinOp::Eq => "=",
        BinOp::Ne => "distinct",
        BinOp::Lt => "<",
        BinOp::Le => "<=",
        BinOp::Gt => ">",
        BinOp::Ge => ">=",
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Div => "div",
        BinOp::Mod => "mod",
    }
}

fn write_term(out: &mut String, t: &Term<StepVar>) {
    match &t.node {
        Node::Lit(l) => out.push_str(&literal(l)),
        Node::Var(v) => write!(out, "{v}").expect("write to string"),
        Node::Unary(op, e) => {
            out.push_str(match op {
                UnOp::Not => "(not ",
                UnOp::Neg => "(- ",
                UnOp::ToReal => "(to_real ",
            });
            write_term(out, e);
            out.push(')');
        }
        Node::Binary(op, a, b) => {
            write!(out, "({} ", op_name(*op)).expect("write to string");
            write_term(out, a);
            out.push(' ');
            write_term(out, b);
            out.push(')');
        }
        Node::Ite(c, a, b) => {
            out.push_str("(ite ");
            write_term(out, c);
            out.push(' ');
            write_term(out, a);
            out.push(' ');
            write_term(out, b);
            out.push(')');
        }
        Node::And(parts) => {
            out.push_str("(and");
            for p in parts {
                out.push(' ');
                write_term(out, p);
            }
            out.push(')');
        }
    }
}

pub fn term(t: &Term<StepVar>) -> String {
    let mut out = String::new();
    write_term(&mut out, t);
    out
}

pub fn declare(var: &StepVar, sort: Sort) -> String {
    format!("(declare-const {var} {})", sort_name(sort))
}

/// `(forall ((v S) ...) (not body))`.
pub fn tail(tail: &UniversalTail, query_sort: impl Fn(&StepVar) -> Sort) -> String {
    let binders: Vec<String> = tail
        .vars
        .iter()
        .map(|v| format!("({v} {})", sort_name(query_sort(v))))
        .collect();
    format!("(forall ({}) (not {}))", binders.join(" "), term(&tail.body))
}

/// Conjunction of rendered parts, without a wrapper for a single part.
pub fn conjunction(parts: &[String]) -> String {
    match parts {
        [] => "true".to_string(),
        [one] => one.clone(),
        _ => format!("(and {})", parts.join(" ")),
    }
}

/// The single assertion of a query: matrix conjuncts followed by the
/// universal tail.
pub fn assertion(q: &QueryFormula) -> String {
    let mut parts: Vec<String> = q.matrix.iter().map(term).collect();
    if let Some(t) = &q.tail {
        parts.push(tail(t, |v| q.sort_of(v).expect("tail variable in symbol table")));
    }
    conjunction(&parts)
}

/// Renders a complete, self-contained script for `q`. Byte-deterministic.
pub fn emit_script(q: &QueryFormula) -> String {
    let mut out = String::from("(set-option :produce-models true)\n");
    for v in &q.exists {
        let sort = q.sort_of(v).expect("existential in symbol table");
        out.push_str(&declare(v, sort));
        out.push('\n');
    }
    writeln!(out, "(assert {})", assertion(q)).expect("write to string");
    out.push_str("(check-sat)\n");
    out
}
