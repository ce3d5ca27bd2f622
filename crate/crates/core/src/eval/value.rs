use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::contract::{format_decimal, Literal, Sort, VarDecl, VarKind};
use crate::error::EvalError;

/// A concrete value. Reals are exact and always normalized.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Int(BigInt),
    Real(BigRational),
}

impl Value {
    pub fn sort(&self) -> Sort {
        match self {
            Value::Bool(_) => Sort::Bool,
            Value::Int(_) => Sort::Int,
            Value::Real(_) => Sort::Real,
        }
    }

    /// `false`, `0`, `0/1`.
    pub fn default_for(sort: Sort) -> Value {
        match sort {
            Sort::Bool => Value::Bool(false),
            Sort::Int => Value::Int(BigInt::zero()),
            Sort::Real => Value::Real(BigRational::zero()),
        }
    }

    pub fn int(v: i64) -> Value {
        Value::Int(BigInt::from(v))
    }

    pub fn real(numer: i64, denom: i64) -> Value {
        Value::Real(BigRational::new(numer.into(), denom.into()))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn to_literal(&self) -> Literal {
        match self {
            Value::Bool(b) => Literal::Bool(*b),
            Value::Int(v) => Literal::Int(v.clone()),
            Value::Real(v) => Literal::Real(v.clone()),
        }
    }

    /// JSON text form: decimal string for integers, `p/q` for reals.
    fn wire(&self) -> String {
        match self {
            Value::Bool(b) => b.to_string(),
            Value::Int(v) => v.to_string(),
            Value::Real(v) => format!("{}/{}", v.numer(), v.denom()),
        }
    }

    fn from_wire(s: &str) -> Result<Value, String> {
        if let Some((p, q)) = s.split_once('/') {
            let p = BigInt::from_str(p.trim()).map_err(|e| format!("bad numerator in `{s}`: {e}"))?;
            let q = BigInt::from_str(q.trim()).map_err(|e| format!("bad denominator in `{s}`: {e}"))?;
            if q.is_zero() {
                return Err(format!("zero denominator in `{s}`"));
            }
            Ok(Value::Real(BigRational::new(p, q)))
        } else {
            BigInt::from_str(s.trim())
                .map(Value::Int)
                .map_err(|e| format!("bad integer `{s}`: {e}"))
        }
    }
}

impl From<&Literal> for Value {
    fn from(lit: &Literal) -> Self {
        match lit {
            Literal::Bool(b) => Value::Bool(*b),
            Literal::Int(v) => Value::Int(v.clone()),
            Literal::Real(v) => Value::Real(v.clone()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Real(v) => f.write_str(&format_decimal(v)),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Bool(b) => serializer.serialize_bool(*b),
            other => serializer.serialize_str(&other.wire()),
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ValueVisitor;
        impl Visitor<'_> for ValueVisitor {
            type Value = Value;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a boolean, a decimal integer string, or a \"p/q\" rational string")
            }

            fn visit_bool<E: de::Error>(self, v: bool) -> Result<Value, E> {
                Ok(Value::Bool(v))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Value, E> {
                Value::from_wire(v).map_err(E::custom)
            }
        }
        deserializer.deserialize_any(ValueVisitor)
    }
}

/// Which variables a valuation is expected to bind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    StateOnly,
    InputOnly,
    StateAndInput,
}

/// Variable name to value. Ordered for deterministic output.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Valuation(pub BTreeMap<String, Value>);

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, (name, value)) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{name}={value}")?;
        }
        f.write_str("}")
    }
}

impl Valuation {
    pub fn new() -> Self {
        Valuation::default()
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.get(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Value) {
        self.0.insert(name.into(), value);
    }

    pub fn with(mut self, name: impl Into<String>, value: Value) -> Self {
        self.insert(name, value);
        self
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.0.iter()
    }

    /// Checks that every variable the role requires is bound with its
    /// declared sort.
    pub fn check_role(&self, decls: &[VarDecl], role: Role) -> Result<(), EvalError> {
        for d in decls {
            let wanted = match role {
                Role::StateOnly => d.kind == VarKind::State,
                Role::InputOnly => d.kind == VarKind::Input,
                Role::StateAndInput => true,
            };
            if !wanted {
                continue;
            }
            match self.get(&d.name) {
                None => return Err(EvalError::MissingBinding(d.name.clone())),
                Some(v) if v.sort() != d.sort => return Err(EvalError::SortMismatch(d.name.clone())),
                Some(_) => {}
            }
        }
        Ok(())
    }
}

impl FromIterator<(String, Value)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (String, Value)>>(iter: I) -> Self {
        Valuation(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_format() {
        let v = Valuation::new()
            .with("b", Value::Bool(true))
            .with("n", Value::int(-12345678901234567))
            .with("r", Value::real(-3, 2));
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"{"b":true,"n":"-12345678901234567","r":"-3/2"}"#);
        let back: Valuation = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn reals_normalize() {
        let v: Value = serde_json::from_str(r#""2/-4""#).unwrap();
        assert_eq!(v, Value::real(-1, 2));
        let whole: Value = serde_json::from_str(r#""3/1""#).unwrap();
        assert_eq!(whole.sort(), Sort::Real);
        assert!(serde_json::from_str::<Value>(r#""1/0""#).is_err());
    }
}
