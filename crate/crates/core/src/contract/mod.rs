//! Contract syntax, the textual format, and typechecking.

mod ast;
mod parse;
mod print;
mod typed;

pub use ast::{BinOp, Contract, Expr, Literal, Section, Sort, UnOp, VarDecl, VarKind};
pub use parse::{parse_contract, parse_expr};
pub use print::format_decimal;
pub use typed::{typecheck, Node, Term, TypedContract, VarRef};

use crate::error::ContractError;

/// Parses and typechecks contract source in one step.
pub fn load_contract(text: &str) -> Result<TypedContract, ContractError> {
    Ok(typecheck(&parse_contract(text)?)?)
}
