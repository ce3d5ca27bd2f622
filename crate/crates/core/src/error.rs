use std::time::Duration;

use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError { line, col, message: message.into() }
    }
}

/// Which typing or scoping rule a contract violated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeRule {
    UnknownVariable,
    DuplicateDeclaration,
    NoStateVariables,
    PrimedInput,
    PrimeOutsideTransition,
    InputInInitial,
    SortMismatch,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{section}: {message} (in `{node}`)")]
pub struct TypeError {
    pub rule: TypeRule,
    /// Contract section (`assume`, `init`, `trans`) or `decls`.
    pub section: String,
    /// Offending sub-expression, pretty-printed.
    pub node: String,
    pub message: String,
}

/// Either failure while loading a contract from text.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ContractError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("type error: {0}")]
    Type(#[from] TypeError),
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("no binding for variable `{0}`")]
    MissingBinding(String),
    #[error("ill-sorted value for `{0}`")]
    SortMismatch(String),
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("could not start solver `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("solver did not complete the SMT-LIB handshake: {0}")]
    Handshake(String),
    #[error("solver protocol error: {0}")]
    Protocol(String),
    #[error("cannot parse model: {0}")]
    ModelParse(String),
    #[error("solver session is no longer running")]
    Dead,
    #[error("i/o error talking to solver: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("invalid options: {0}")]
    Options(String),
    #[error("counterexample at depth {depth} failed validation: {detail}")]
    CounterexampleMismatch { depth: usize, detail: String },
    #[error("analysis timed out after {0:?}")]
    Timeout(Duration),
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("variable `{0}` has sort real; the finite-domain oracle only handles bool and int")]
    RealVariableUnsupported(String),
    #[error("domain has {size} valuations, above the cap of {cap}")]
    DomainTooLarge { size: u128, cap: u128 },
    #[error("no domain given for variable `{0}`")]
    MissingDomain(String),
    #[error("empty range {lo}..{hi} for `{name}`")]
    EmptyRange { name: String, lo: i64, hi: i64 },
    #[error("bad domain annotation: {0}")]
    Annotation(String),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("contract is not realizable on this domain")]
    NotRealizable,
}
