//! Federated SQL over relational tables and HTTP APIs.
//!
//! APIs appear either as virtual tables, rewritten into materialization steps
//! before execution, or as scalar functions callable inside SQL.

pub mod bridge;
pub mod cli;
pub mod data;
pub mod eval;
pub mod executor;
pub mod http_server;
pub mod scalar;
pub mod schema;
pub mod sql;
pub mod tablegen;
pub mod value;

pub use value::{Dtype, ResultTable, Value};
