pub mod cli;
pub mod contract;
pub mod corpus;
pub mod engine;
pub mod error;
pub mod eval;
pub mod oracle;
pub mod smtlib;
pub mod unroll;
