//! Untyped contract syntax as produced by the parser.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;

/// Theory sort of a variable or expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Bool,
    Int,
    Real,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Bool => "bool",
            Sort::Int => "int",
            Sort::Real => "real",
        })
    }
}

/// Whether a variable is supplied by the environment or owned by the component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    Input,
    State,
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarKind::Input => "input",
            VarKind::State => "state",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarDecl {
    pub name: String,
    pub sort: Sort,
    pub kind: VarKind,
}

impl VarDecl {
    pub fn new(name: impl Into<String>, sort: Sort, kind: VarKind) -> Self {
        VarDecl { name: name.into(), sort, kind }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Literal {
    Bool(bool),
    Int(BigInt),
    /// Decimal literals are exact rationals.
    Real(BigRational),
}

impl Literal {
    pub fn sort(&self) -> Sort {
        match self {
            Literal::Bool(_) => Sort::Bool,
            Literal::Int(_) => Sort::Int,
            Literal::Real(_) => Sort::Real,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
    /// Explicit `real(e)` cast from Int.
    ToReal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    And,
    Or,
    Implies,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Implies => "=>",
            BinOp::Eq => "=",
            BinOp::Ne => "<>",
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

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }
}

/// Expression tree over contract variables. A `Var` is primed when it denotes
/// the next-state value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Lit(Literal),
    Var { name: String, primed: bool },
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn tt() -> Expr {
        Expr::Lit(Literal::Bool(true))
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var { name: name.into(), primed: false }
    }

    pub fn next(name: impl Into<String>) -> Expr {
        Expr::Var { name: name.into(), primed: true }
    }

    pub fn int(v: i64) -> Expr {
        Expr::Lit(Literal::Int(BigInt::from(v)))
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    pub fn and(lhs: Expr, rhs: Expr) -> Expr {
        Expr::bin(BinOp::And, lhs, rhs)
    }

    /// Visits every variable reference in the tree.
    pub fn for_each_var(&self, f: &mut impl FnMut(&str, bool)) {
        match self {
            Expr::Lit(_) => {}
            Expr::Var { name, primed } => f(name, *primed),
            Expr::Unary(_, e) => e.for_each_var(f),
            Expr::Binary(_, a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
            Expr::Ite(c, t, e) => {
                c.for_each_var(f);
                t.for_each_var(f);
                e.for_each_var(f);
            }
        }
    }
}

/// Which of the three contract sections an expression belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Section {
    Assume,
    Init,
    Trans,
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Section::Assume => "assume",
            Section::Init => "init",
            Section::Trans => "trans",
        })
    }
}

/// An assume/guarantee contract: assumption `A(s, i)`, initial guarantee
/// `G_I(s)` and transitional guarantee `G_T(s, i, s')`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contract {
    pub decls: Vec<VarDecl>,
    pub assumption: Expr,
    pub initial: Expr,
    pub transition: Expr,
}

impl Contract {
    pub fn section(&self, section: Section) -> &Expr {
        match section {
            Section::Assume => &self.assumption,
            Section::Init => &self.initial,
            Section::Trans => &self.transition,
        }
    }

    pub fn decl(&self, name: &str) -> Option<&VarDecl> {
        self.decls.iter().find(|d| d.name == name)
    }

    pub fn states(&self) -> impl Iterator<Item = &VarDecl> {
        self.decls.iter().filter(|d| d.kind == VarKind::State)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &VarDecl> {
        self.decls.iter().filter(|d| d.kind == VarKind::Input)
    }
}
