use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;

use crate::contract::{Sort, TypedContract, VarDecl};
use crate::error::OracleError;
use crate::eval::{Valuation, Value};

/// Marker introducing a domain annotation inside a `--` comment.
pub const ANNOTATION: &str = "@oracle-domain";

pub const DEFAULT_CAP: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Carrier {
    Bool,
    /// Inclusive range.
    Int { lo: i64, hi: i64 },
}

impl Carrier {
    pub fn size(&self) -> u128 {
        match *self {
            Carrier::Bool => 2,
            Carrier::Int { lo, hi } => (hi as i128 - lo as i128 + 1) as u128,
        }
    }

    /// Values in ascending order (`false` before `true`).
    pub fn values(&self) -> Vec<Value> {
        match *self {
            Carrier::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Carrier::Int { lo, hi } => (lo..=hi).map(|v| Value::Int(BigInt::from(v))).collect(),
        }
    }
}

impl fmt::Display for Carrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Carrier::Bool => f.write_str("bool"),
            Carrier::Int { lo, hi } => write!(f, "{lo}..{hi}"),
        }
    }
}

/// A finite carrier for every variable of a contract.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainSpec {
    pub carriers: BTreeMap<String, Carrier>,
    /// Upper bound on the number of (state, input) valuation pairs.
    pub cap: u128,
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec { carriers: BTreeMap::new(), cap: DEFAULT_CAP }
    }
}

impl DomainSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn int(mut self, name: impl Into<String>, lo: i64, hi: i64) -> Self {
        self.carriers.insert(name.into(), Carrier::Int { lo, hi });
        self
    }

    pub fn boolean(mut self, name: impl Into<String>) -> Self {
        self.carriers.insert(name.into(), Carrier::Bool);
        self
    }

    /// Reads every `-- @oracle-domain name: lo..hi, flag: bool` line of a
    /// contract source. Returns `None` when there is no annotation.
    pub fn from_source(text: &str) -> Result<Option<DomainSpec>, OracleError> {
        let mut found = false;
        let mut spec = DomainSpec::new();
        for line in text.lines() {
            let Some(comment) = line.split_once("--").map(|(_, c)| c.trim()) else { continue };
            let Some(body) = comment.strip_prefix(ANNOTATION) else { continue };
            found = true;
            for entry in body.split(',').map(str::trim).filter(|e| !e.is_empty()) {
                let (name, carrier) = parse_entry(entry)?;
                if spec.carriers.insert(name.clone(), carrier).is_some() {
                    return Err(OracleError::Annotation(format!("`{name}` is given twice")));
                }
            }
        }
        Ok(found.then_some(spec))
    }

    /// Checks the domain against a contract: every variable covered, no reals,
    /// no empty ranges, size within the cap. Bool variables need no entry.
    pub fn carriers_for(&self, contract: &TypedContract) -> Result<Vec<(VarDecl, Carrier)>, OracleError> {
        let mut out = Vec::new();
        let mut size: u128 = 1;
        for d in contract.decls() {
            let carrier = match (d.sort, self.carriers.get(&d.name)) {
                (Sort::Real, _) => return Err(OracleError::RealVariableUnsupported(d.name.clone())),
                (Sort::Bool, None | Some(Carrier::Bool)) => Carrier::Bool,
                (Sort::Int, Some(c @ Carrier::Int { lo, hi })) => {
                    if lo > hi {
                        return Err(OracleError::EmptyRange { name: d.name.clone(), lo: *lo, hi: *hi });
                    }
                    *c
                }
                (Sort::Int, None) => return Err(OracleError::MissingDomain(d.name.clone())),
                (sort, Some(c)) => {
                    return Err(OracleError::Annotation(format!("`{}` has sort {sort} but carrier {c}", d.name)))
                }
            };
            size = size.saturating_mul(carrier.size());
            out.push((d.clone(), carrier));
        }
        if size > self.cap {
            return Err(OracleError::DomainTooLarge { size, cap: self.cap });
        }
        Ok(out)
    }
}

fn parse_entry(entry: &str) -> Result<(String, Carrier), OracleError> {
    let bad = || OracleError::Annotation(format!("cannot read `{entry}`"));
    let (name, range) = entry.split_once(':').ok_or_else(bad)?;
    let name = name.trim();
    if name.is_empty() {
        return Err(bad());
    }
    let range = range.trim();
    if range == "bool" {
        return Ok((name.to_string(), Carrier::Bool));
    }
    // The upper bound may be negative, so split on the first `..` only.
    let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
    let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: i64 = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(OracleError::EmptyRange { name: name.to_string(), lo, hi });
    }
    Ok((name.to_string(), Carrier::Int { lo, hi }))
}

/// All valuations of `vars`, ordered lexicographically by declaration order
/// and then by value.
pub(crate) fn enumerate(vars: &[(VarDecl, Carrier)]) -> Vec<Valuation> {
    let mut out = vec![Valuation::new()];
    for (d, c) in vars.iter().rev() {
        let values = c.values();
        let mut next = Vec::with_capacity(out.len() * values.len());
        for v in &values {
            for rest in &out {
                let mut val = rest.clone();
                val.insert(d.name.clone(), v.clone());
                next.push(val);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::load_contract;

    #[test]
    fn annotation() {
        let text = "-- @oracle-domain s: -2..2, i: 0..0\ninput i:int; state s:int; -- @oracle-domain b: bool\n";
        let d = DomainSpec::from_source(text).unwrap().unwrap();
        assert_eq!(d.carriers["s"], Carrier::Int { lo: -2, hi: 2 });
        assert_eq!(d.carriers["i"], Carrier::Int { lo: 0, hi: 0 });
        assert_eq!(d.carriers["b"], Carrier::Bool);
        assert_eq!(DomainSpec::from_source("state s:int;").unwrap(), None);
        let neg = DomainSpec::from_source("-- @oracle-domain s: -5..-3").unwrap().unwrap();
        assert_eq!(neg.carriers["s"], Carrier::Int { lo: -5, hi: -3 });
    }

    #[test]
    fn annotation_errors() {
        assert!(matches!(DomainSpec::from_source("-- @oracle-domain s 1..2"), Err(OracleError::Annotation(_))));
        assert!(matches!(DomainSpec::from_source("-- @oracle-domain s: 3..1"), Err(OracleError::EmptyRange { .. })));
        assert!(matches!(
            DomainSpec::from_source("-- @oracle-domain s: 1..2, s: 0..1"),
            Err(OracleError::Annotation(_))
        ));
    }

    #[test]
    fn coverage_and_cap() {
        let c = load_contract("input b: bool; state s:int; state r: real;").unwrap();
        assert!(matches!(
            DomainSpec::new().int("s", 0, 1).carriers_for(&c),
            Err(OracleError::RealVariableUnsupported(_))
        ));
        let c = load_contract("input b: bool; state s:int;").unwrap();
        assert!(matches!(DomainSpec::new().carriers_for(&c), Err(OracleError::MissingDomain(_))));
        assert_eq!(DomainSpec::new().int("s", 0, 1).carriers_for(&c).unwrap().len(), 2);
        let big = DomainSpec { cap: 10, ..DomainSpec::new().int("s", 0, 9) };
        assert!(matches!(big.carriers_for(&c), Err(OracleError::DomainTooLarge { size: 20, cap: 10 })));
    }

    #[test]
    fn enumeration_order() {
        let c = load_contract("state a: bool; state n: int;").unwrap();
        let vars = DomainSpec::new().int("n", 0, 1).carriers_for(&c).unwrap();
        let all: Vec<String> = enumerate(&vars)
            .iter()
            .map(|v| format!("{}{}", v.get("a").unwrap(), v.get("n").unwrap()))
            .collect();
        assert_eq!(all, ["false0", "false1", "true0", "true1"]);
    }
}
