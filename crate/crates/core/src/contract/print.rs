//! Pretty printing in the concrete contract syntax. Compound expressions are
//! fully parenthesized so that printing and re-parsing is the identity.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::ast::{Contract, Expr, Literal, UnOp};

/// Renders a rational as a finite decimal when it has one (`1.5`, `-0.25`,
/// `3.0`), and as `p/q` otherwise.
pub fn format_decimal(value: &BigRational) -> String {
    match decimal_parts(value) {
        Some((int_part, frac)) => {
            let sign = if value.is_negative() { "-" } else { "" };
            let frac = if frac.is_empty() { "0".to_string() } else { frac };
            format!("{sign}{int_part}.{frac}")
        }
        None => format!("{}/{}", value.numer(), value.denom()),
    }
}

/// Splits |value| into integer digits and fractional digits, or `None` when the
/// decimal expansion does not terminate.
pub(crate) fn decimal_parts(value: &BigRational) -> Option<(BigInt, String)> {
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut den = value.denom().clone();
    let (mut twos, mut fives) = (0u32, 0u32);
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    let scale = twos.max(fives);
    let scaled = value.abs() * BigRational::from_integer(BigInt::from(10).pow(scale));
    let digits = scaled.to_integer();
    let factor = BigInt::from(10).pow(scale);
    let (int_part, frac_part) = digits.div_rem(&factor);
    let frac = if scale == 0 {
        String::new()
    } else {
        format!("{:0>width$}", frac_part.to_string(), width = scale as usize)
    };
    Some((int_part, frac))
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Int(v) => write!(f, "{v}"),
            Literal::Real(v) => f.write_str(&format_decimal(v)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(lit) => write!(f, "{lit}"),
            Expr::Var { name, primed } => {
                write!(f, "{name}{}", if *primed { "'" } else { "" })
            }
            Expr::Unary(UnOp::Not, e) => write!(f, "(not {e})"),
            Expr::Unary(UnOp::Neg, e) => write!(f, "-({e})"),
            Expr::Unary(UnOp::ToReal, e) => write!(f, "real({e})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Ite(c, t, e) => write!(f, "(if {c} then {t} else {e})"),
        }
    }
}

impl fmt::Display for Contract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.decls {
            writeln!(f, "{} {}: {};", d.kind, d.name, d.sort)?;
        }
        writeln!(f, "assume {};", self.assumption)?;
        writeln!(f, "init {};", self.initial)?;
        writeln!(f, "trans {};", self.transition)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn decimals() {
        assert_eq!(format_decimal(&rat(1, 10)), "0.1");
        assert_eq!(format_decimal(&rat(-3, 2)), "-1.5");
        assert_eq!(format_decimal(&rat(3, 1)), "3.0");
        assert_eq!(format_decimal(&rat(1, 8)), "0.125");
        assert_eq!(format_decimal(&rat(-1, 40)), "-0.025");
        assert_eq!(format_decimal(&rat(1, 3)), "1/3");
    }
}
