use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::sexp::{self, SExp};
use crate::contract::Sort;
use crate::error::SolverError;
use crate::eval::{Env, Value};
use crate::unroll::{StepVar, SymbolTable};

/// Values for the existential symbols of a satisfied query.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment(pub BTreeMap<StepVar, Value>);

impl Assignment {
    pub fn get(&self, var: &StepVar) -> Option<&Value> {
        self.0.get(var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Env<StepVar> for Assignment {
    fn lookup(&self, var: &StepVar) -> Option<&Value> {
        self.0.get(var)
    }
}

fn bad(e: &SExp, what: &str) -> SolverError {
    SolverError::ModelParse(format!("{what}: `{e}`"))
}

fn rational(e: &SExp) -> Result<BigRational, SolverError> {
    match e {
        SExp::Atom(a) => {
            if let Some((whole, frac)) = a.split_once('.') {
                let digits = format!("{whole}{frac}");
                let numer = BigInt::from_str(&digits).map_err(|_| bad(e, "bad decimal"))?;
                Ok(BigRational::new(numer, BigInt::from(10).pow(frac.len() as u32)))
            } else {
                let v = BigInt::from_str(a).map_err(|_| bad(e, "bad numeral"))?;
                Ok(BigRational::from_integer(v))
            }
        }
        SExp::List(items) => match items.as_slice() {
            [SExp::Atom(op), x] if op == "-" => Ok(-rational(x)?),
            [SExp::Atom(op), x, y] if op == "/" => {
                let den = rational(y)?;
                if den.is_zero() {
                    return Err(bad(e, "zero denominator"));
                }
                Ok(rational(x)? / den)
            }
            _ => Err(bad(e, "unsupported numeric term")),
        },
        SExp::Str(_) => Err(bad(e, "string where a number was expected")),
    }
}

/// Reads a model value of the given sort.
pub fn parse_value(e: &SExp, sort: Sort) -> Result<Value, SolverError> {
    match sort {
        Sort::Bool => match e.atom() {
            Some("true") => Ok(Value::Bool(true)),
            Some("false") => Ok(Value::Bool(false)),
            _ => Err(bad(e, "expected a boolean")),
        },
        Sort::Int => {
            let r = rational(e)?;
            if !r.is_integer() {
                return Err(bad(e, "non-integral value for an Int symbol"));
            }
            Ok(Value::Int(r.to_integer()))
        }
        Sort::Real => Ok(Value::Real(rational(e)?)),
    }
}

/// Parses a `(get-model)` reply into an assignment over `symbols`. Symbols the
/// model leaves out are unconstrained and get their sort's default value;
/// entries for unknown names (solver auxiliaries) are ignored.
pub fn parse_model(model_text: &str, symbols: &SymbolTable) -> Result<Assignment, SolverError> {
    let by_name: HashMap<String, (&StepVar, Sort)> =
        symbols.iter().map(|(v, s)| (v.to_string(), (v, s.sort))).collect();
    let parsed = sexp::parse(model_text).map_err(SolverError::ModelParse)?;
    let entries = match &parsed {
        SExp::List(items) => match items.first() {
            Some(SExp::Atom(head)) if head == "model" => &items[1..],
            _ => &items[..],
        },
        other => return Err(bad(other, "model is not a list")),
    };

    let mut values = BTreeMap::new();
    for entry in entries {
        let items = entry.list().ok_or_else(|| bad(entry, "model entry is not a list"))?;
        match items {
            [SExp::Atom(kw), SExp::Atom(name), SExp::List(args), _sort, body] if kw == "define-fun" => {
                if !args.is_empty() {
                    continue;
                }
                if let Some((var, sort)) = by_name.get(name.as_str()) {
                    values.insert((*var).clone(), parse_value(body, *sort)?);
                }
            }
            [SExp::Atom(kw), ..] if kw == "define-fun" || kw == "declare-fun" || kw == "forall" || kw == "define-sort" || kw == "declare-sort" => {}
            _ => return Err(bad(entry, "unexpected model entry")),
        }
    }
    for (var, sym) in symbols {
        values.entry(var.clone()).or_insert_with(|| Value::default_for(sym.sort));
    }
    Ok(Assignment(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::VarKind;
    use crate::unroll::Symbol;

    fn table(entries: &[(StepVar, Sort)]) -> SymbolTable {
        entries
            .iter()
            .map(|(v, s)| (v.clone(), Symbol { sort: *s, kind: VarKind::State }))
            .collect()
    }

    #[test]
    fn integers() {
        let t = table(&[(StepVar::at("s", 0), Sort::Int)]);
        let a = parse_model("((define-fun s$0 () Int 0))", &t).unwrap();
        assert_eq!(a.get(&StepVar::at("s", 0)), Some(&Value::int(0)));
        let a = parse_model("(\n  (define-fun s$0 () Int\n    (- 4))\n)", &t).unwrap();
        assert_eq!(a.get(&StepVar::at("s", 0)), Some(&Value::int(-4)));
    }

    #[test]
    fn reals() {
        let t = table(&[(StepVar::at("r", 0), Sort::Real)]);
        let one_tenth = parse_model("((define-fun r$0 () Real (/ 1 10)))", &t).unwrap();
        assert_eq!(one_tenth.get(&StepVar::at("r", 0)), Some(&Value::real(1, 10)));
        let neg = parse_model("((define-fun r$0 () Real (- (/ 3 2))))", &t).unwrap();
        assert_eq!(neg.get(&StepVar::at("r", 0)), Some(&Value::real(-3, 2)));
        let z3_style = parse_model("((define-fun r$0 () Real (- (/ 3.0 2.0))))", &t).unwrap();
        assert_eq!(z3_style.get(&StepVar::at("r", 0)), Some(&Value::real(-3, 2)));
        let dec = parse_model("((define-fun r$0 () Real 0.25))", &t).unwrap();
        assert_eq!(dec.get(&StepVar::at("r", 0)), Some(&Value::real(1, 4)));
    }

    #[test]
    fn defaults_and_noise() {
        let t = table(&[
            (StepVar::at("b", 1), Sort::Bool),
            (StepVar::at("n", 1), Sort::Int),
            (StepVar::at("r", 1), Sort::Real),
        ]);
        let a = parse_model(
            "(model (define-fun k!0 ((x!0 Int)) Int x!0) (define-fun b$1 () Bool true) (define-fun aux () Int 3))",
            &t,
        )
        .unwrap();
        assert_eq!(a.get(&StepVar::at("b", 1)), Some(&Value::Bool(true)));
        assert_eq!(a.get(&StepVar::at("n", 1)), Some(&Value::int(0)));
        assert_eq!(a.get(&StepVar::at("r", 1)), Some(&Value::real(0, 1)));
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn malformed() {
        let t = table(&[(StepVar::at("s", 0), Sort::Int)]);
        assert!(matches!(
            parse_model("((define-fun s$0 () Int (root-obj (+ (^ x 2) (- 2)) 1)))", &t),
            Err(SolverError::ModelParse(_))
        ));
        assert!(parse_model("((define-fun s$0 () Int 1.5))", &t).is_err());
        assert!(parse_model("(oops", &t).is_err());
    }
}
