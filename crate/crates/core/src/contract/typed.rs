//! Sort-annotated terms and the contract typechecker.

use std::collections::HashSet;
use std::fmt;

use super::ast::{BinOp, Contract, Expr, Literal, Section, Sort, UnOp, VarDecl, VarKind};
use crate::error::{TypeError, TypeRule};

/// A term whose every node carries its sort. `V` is the variable type:
/// [`VarRef`] inside a contract, [`StepVar`](crate::unroll::StepVar) once unrolled.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term<V> {
    pub sort: Sort,
    pub node: Node<V>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node<V> {
    Lit(Literal),
    Var(V),
    Unary(UnOp, Box<Term<V>>),
    Binary(BinOp, Box<Term<V>>, Box<Term<V>>),
    Ite(Box<Term<V>>, Box<Term<V>>, Box<Term<V>>),
    /// N-ary conjunction with at least two conjuncts.
    And(Vec<Term<V>>),
}

impl<V> Term<V> {
    pub fn lit(lit: Literal) -> Self {
        Term { sort: lit.sort(), node: Node::Lit(lit) }
    }

    pub fn bool(b: bool) -> Self {
        Term::lit(Literal::Bool(b))
    }

    pub fn var(v: V, sort: Sort) -> Self {
        Term { sort, node: Node::Var(v) }
    }

    pub fn not(t: Term<V>) -> Self {
        Term { sort: Sort::Bool, node: Node::Unary(UnOp::Not, Box::new(t)) }
    }

    pub fn is_true(&self) -> bool {
        matches!(self.node, Node::Lit(Literal::Bool(true)))
    }

    /// Conjunction of `parts`: `true` when empty, the sole part when singleton.
    pub fn conj(mut parts: Vec<Term<V>>) -> Self {
        match parts.len() {
            0 => Term::bool(true),
            1 => parts.pop().expect("one part"),
            _ => Term { sort: Sort::Bool, node: Node::And(parts) },
        }
    }

    /// Rebuilds the term replacing each variable by `f(var)`. Sorts of the
    /// replacement must match the replaced variable.
    pub fn substitute<W>(&self, f: &mut impl FnMut(&V, Sort) -> Term<W>) -> Term<W> {
        let node = match &self.node {
            Node::Lit(l) => Node::Lit(l.clone()),
            Node::Var(v) => {
                let t = f(v, self.sort);
                debug_assert_eq!(t.sort, self.sort);
                return t;
            }
            Node::Unary(op, e) => Node::Unary(*op, Box::new(e.substitute(f))),
            Node::Binary(op, a, b) => {
                Node::Binary(*op, Box::new(a.substitute(f)), Box::new(b.substitute(f)))
            }
            Node::Ite(c, t, e) => Node::Ite(
                Box::new(c.substitute(f)),
                Box::new(t.substitute(f)),
                Box::new(e.substitute(f)),
            ),
            Node::And(parts) => Node::And(parts.iter().map(|p| p.substitute(f)).collect()),
        };
        Term { sort: self.sort, node }
    }

    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a V)) {
        match &self.node {
            Node::Lit(_) => {}
            Node::Var(v) => f(v),
            Node::Unary(_, e) => e.for_each_var(f),
            Node::Binary(_, a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
            Node::Ite(c, t, e) => {
                c.for_each_var(f);
                t.for_each_var(f);
                e.for_each_var(f);
            }
            Node::And(parts) => parts.iter().for_each(|p| p.for_each_var(f)),
        }
    }

    /// Visits every node, parents before children.
    pub fn for_each_node<'a>(&'a self, f: &mut impl FnMut(&'a Term<V>)) {
        f(self);
        match &self.node {
            Node::Lit(_) | Node::Var(_) => {}
            Node::Unary(_, e) => e.for_each_node(f),
            Node::Binary(_, a, b) => {
                a.for_each_node(f);
                b.for_each_node(f);
            }
            Node::Ite(c, t, e) => {
                c.for_each_node(f);
                t.for_each_node(f);
                e.for_each_node(f);
            }
            Node::And(parts) => parts.iter().for_each(|p| p.for_each_node(f)),
        }
    }

    pub fn has_vars(&self) -> bool {
        let mut any = false;
        self.for_each_var(&mut |_| any = true);
        any
    }

    /// Drops literal-`true` conjuncts and flattens nested conjunctions.
    /// Semantics preserving.
    pub fn simplify(&self) -> Term<V>
    where
        V: Clone,
    {
        fn collect<V: Clone>(t: &Term<V>, out: &mut Vec<Term<V>>) {
            match &t.node {
                Node::And(parts) => parts.iter().for_each(|p| collect(p, out)),
                Node::Binary(BinOp::And, a, b) => {
                    collect(a, out);
                    collect(b, out);
                }
                _ => {
                    let s = t.simplify();
                    if !s.is_true() {
                        out.push(s);
                    }
                }
            }
        }
        match &self.node {
            Node::And(_) | Node::Binary(BinOp::And, _, _) => {
                let mut parts = Vec::new();
                collect(self, &mut parts);
                Term::conj(parts)
            }
            Node::Lit(_) | Node::Var(_) => self.clone(),
            Node::Unary(op, e) => Term { sort: self.sort, node: Node::Unary(*op, Box::new(e.simplify())) },
            Node::Binary(op, a, b) => Term {
                sort: self.sort,
                node: Node::Binary(*op, Box::new(a.simplify()), Box::new(b.simplify())),
            },
            Node::Ite(c, t, e) => Term {
                sort: self.sort,
                node: Node::Ite(Box::new(c.simplify()), Box::new(t.simplify()), Box::new(e.simplify())),
            },
        }
    }
}

/// A resolved reference to a declared contract variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarRef {
    pub name: String,
    pub kind: VarKind,
    pub primed: bool,
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.name, if self.primed { "'" } else { "" })
    }
}

impl<V: fmt::Display> fmt::Display for Term<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Node::Lit(l) => write!(f, "{l}"),
            Node::Var(v) => write!(f, "{v}"),
            Node::Unary(UnOp::Not, e) => write!(f, "(not {e})"),
            Node::Unary(UnOp::Neg, e) => write!(f, "-({e})"),
            Node::Unary(UnOp::ToReal, e) => write!(f, "real({e})"),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Ite(c, t, e) => write!(f, "(if {c} then {t} else {e})"),
            Node::And(parts) => {
                f.write_str("(")?;
                for (k, p) in parts.iter().enumerate() {
                    if k > 0 {
                        f.write_str(" and ")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A contract whose sections have been resolved and sort-checked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedContract {
    pub source: Contract,
    pub assumption: Term<VarRef>,
    pub initial: Term<VarRef>,
    pub transition: Term<VarRef>,
    /// Non-fatal diagnostics, e.g. nonlinear arithmetic.
    pub warnings: Vec<String>,
}

impl TypedContract {
    pub fn decls(&self) -> &[VarDecl] {
        &self.source.decls
    }

    pub fn states(&self) -> impl Iterator<Item = &VarDecl> {
        self.source.states()
    }

    pub fn inputs(&self) -> impl Iterator<Item = &VarDecl> {
        self.source.inputs()
    }

    pub fn decl(&self, name: &str) -> Option<&VarDecl> {
        self.source.decl(name)
    }

    pub fn section(&self, section: Section) -> &Term<VarRef> {
        match section {
            Section::Assume => &self.assumption,
            Section::Init => &self.initial,
            Section::Trans => &self.transition,
        }
    }
}

struct Checker<'a> {
    decls: &'a [VarDecl],
    section: Section,
    warnings: Vec<String>,
}

impl Checker<'_> {
    fn fail(&self, rule: TypeRule, node: &Expr, message: impl Into<String>) -> TypeError {
        TypeError {
            rule,
            section: self.section.to_string(),
            node: node.to_string(),
            message: message.into(),
        }
    }

    fn check(&mut self, e: &Expr) -> Result<Term<VarRef>, TypeError> {
        use Sort::*;
        Ok(match e {
            Expr::Lit(l) => Term::lit(l.clone()),
            Expr::Var { name, primed } => {
                let Some(decl) = self.decls.iter().find(|d| &d.name == name) else {
                    return Err(self.fail(
                        TypeRule::UnknownVariable,
                        e,
                        format!("unknown variable `{name}`"),
                    ));
                };
                match (decl.kind, *primed, self.section) {
                    (VarKind::Input, true, _) => {
                        return Err(self.fail(
                            TypeRule::PrimedInput,
                            e,
                            format!("primed input `{name}'`: inputs have no next-state value"),
                        ))
                    }
                    (VarKind::State, true, Section::Assume | Section::Init) => {
                        return Err(self.fail(
                            TypeRule::PrimeOutsideTransition,
                            e,
                            format!("prime on `{name}` outside the transition guarantee"),
                        ))
                    }
                    (VarKind::Input, false, Section::Init) => {
                        return Err(self.fail(
                            TypeRule::InputInInitial,
                            e,
                            format!("input `{name}` used in the initial guarantee"),
                        ))
                    }
                    _ => {}
                }
                Term::var(
                    VarRef { name: name.clone(), kind: decl.kind, primed: *primed },
                    decl.sort,
                )
            }
            Expr::Unary(op, inner) => {
                let t = self.check(inner)?;
                let sort = match (op, t.sort) {
                    (UnOp::Not, Bool) => Bool,
                    (UnOp::Neg, Int | Real) => t.sort,
                    (UnOp::ToReal, Int) => Real,
                    (op, s) => {
                        let want = match op {
                            UnOp::Not => "bool",
                            UnOp::Neg => "int or real",
                            UnOp::ToReal => "int",
                        };
                        return Err(self.fail(
                            TypeRule::SortMismatch,
                            e,
                            format!("operand has sort {s}, expected {want}"),
                        ));
                    }
                };
                Term { sort, node: Node::Unary(*op, Box::new(t)) }
            }
            Expr::Binary(op, lhs, rhs) => {
                let a = self.check(lhs)?;
                let b = self.check(rhs)?;
                let mismatch = |this: &Self, want: &str| {
                    Err(this.fail(
                        TypeRule::SortMismatch,
                        e,
                        format!(
                            "`{}` applied to {} and {}, expected {want}",
                            op.symbol(),
                            a.sort,
                            b.sort
                        ),
                    ))
                };
                let sort = match op {
                    BinOp::And | BinOp::Or | BinOp::Implies => {
                        if a.sort != Bool || b.sort != Bool {
                            return mismatch(self, "bool operands");
                        }
                        Bool
                    }
                    BinOp::Eq | BinOp::Ne => {
                        if a.sort != b.sort {
                            return mismatch(self, "operands of the same sort");
                        }
                        Bool
                    }
                    BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                        if a.sort != b.sort || a.sort == Bool {
                            return mismatch(self, "two int or two real operands");
                        }
                        Bool
                    }
                    BinOp::Add | BinOp::Sub | BinOp::Mul => {
                        if a.sort != b.sort || a.sort == Bool {
                            return mismatch(self, "two int or two real operands");
                        }
                        if *op == BinOp::Mul && a.has_vars() && b.has_vars() {
                            self.warnings.push(format!(
                                "{}: nonlinear multiplication `{e}`; the solver may answer unknown",
                                self.section
                            ));
                        }
                        a.sort
                    }
                    BinOp::Div | BinOp::Mod => {
                        if a.sort != Int || b.sort != Int {
                            return mismatch(self, "int operands");
                        }
                        if b.has_vars() {
                            self.warnings.push(format!(
                                "{}: `{}` by a non-constant in `{e}`; the solver may answer unknown",
                                self.section,
                                op.symbol()
                            ));
                        }
                        Int
                    }
                };
                Term { sort, node: Node::Binary(*op, Box::new(a), Box::new(b)) }
            }
            Expr::Ite(c, t, f) => {
                let c = self.check(c)?;
                let t = self.check(t)?;
                let f = self.check(f)?;
                if c.sort != Bool {
                    return Err(self.fail(TypeRule::SortMismatch, e, "if-condition must be bool"));
                }
                if t.sort != f.sort {
                    return Err(self.fail(
                        TypeRule::SortMismatch,
                        e,
                        format!("branches have sorts {} and {}", t.sort, f.sort),
                    ));
                }
                Term { sort: t.sort, node: Node::Ite(Box::new(c), Box::new(t), Box::new(f)) }
            }
        })
    }
}

/// Resolves and sort-checks a parsed contract.
pub fn typecheck(contract: &Contract) -> Result<TypedContract, TypeError> {
    let decl_error = |rule, node: String, message: String| TypeError {
        rule,
        section: "decls".into(),
        node,
        message,
    };
    let mut seen = HashSet::new();
    for d in &contract.decls {
        if !seen.insert(d.name.as_str()) {
            return Err(decl_error(
                TypeRule::DuplicateDeclaration,
                d.name.clone(),
                format!("`{}` declared more than once", d.name),
            ));
        }
    }
    if contract.states().next().is_none() {
        return Err(decl_error(
            TypeRule::NoStateVariables,
            String::new(),
            "a contract needs at least one state variable".into(),
        ));
    }

    let mut warnings = Vec::new();
    let mut section = |section: Section| -> Result<Term<VarRef>, TypeError> {
        let mut checker = Checker { decls: &contract.decls, section, warnings: Vec::new() };
        let expr = contract.section(section);
        let t = checker.check(expr)?;
        if t.sort != Sort::Bool {
            return Err(checker.fail(
                TypeRule::SortMismatch,
                expr,
                format!("section has sort {}, expected bool", t.sort),
            ));
        }
        warnings.append(&mut checker.warnings);
        Ok(t)
    };
    let assumption = section(Section::Assume)?;
    let initial = section(Section::Init)?;
    let transition = section(Section::Trans)?;
    Ok(TypedContract { source: contract.clone(), assumption, initial, transition, warnings })
}
