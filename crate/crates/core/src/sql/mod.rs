//! SQL front end: parsing, name binding, virtual-table rewriting, and
//! scalar-function validation.

pub mod ast;
mod bind;
pub mod lexer;
pub(crate) mod parser;
mod plan;
mod scalar_check;

use thiserror::Error;

use crate::value::Dtype;

pub(crate) use bind::bind_with;
pub use bind::{parse_sql, ParsedQuery, TableKind, TableRef};
pub use parser::parse_query_text;
pub(crate) use plan::conjunction_matches;
pub use plan::{plan_query, Atom, AtomOp, BindingSource, DnfConstraint, MaterializeStep, Operand, QueryPlan};
pub use scalar_check::{validate_scalar_sql, BUILTIN_FUNCTIONS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SqlError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { message: String, offset: usize },
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("ambiguous column `{0}`")]
    AmbiguousColumn(String),
    #[error("unknown column `{}`", if qualifier.is_empty() { name.clone() } else { format!("{qualifier}.{name}") })]
    UnknownColumn { qualifier: String, name: String },
    #[error("cannot bind required input `{column}` of virtual table `{table}`: Cannot invoke any of the REST API")]
    UnboundInput { table: String, column: String },
    #[error("cyclic dependency among virtual tables: {}", .0.join(" -> "))]
    CyclicDependency(Vec<String>),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("function `{name}` expects {expected} argument(s), got {got}")]
    ArityMismatch { name: String, expected: usize, got: usize },
    #[error("argument {argument} of `{function}` expects {expected}, got {found}")]
    TypeMismatch {
        function: String,
        argument: usize,
        expected: Dtype,
        found: String,
    },
}
