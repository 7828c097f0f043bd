//! Table-backed HTTP endpoints that answer equality-filtered requests with
//! the same rows the equivalent `SELECT *` would return.

mod manifest;
mod openapi;
mod server;

use std::sync::Arc;

use serde_json::{Map, Value as Json};
use thiserror::Error;

use crate::data::{conform, LoadedTable};
use crate::schema::{
    parse_ddl, AbstractSchema, ApiMapping, ApiParamDef, Direction, EntityKind, HttpMethod, ParamLocation, SchemaError,
    TableDdl,
};
use crate::value::{Dtype, ResultTable, Value};

pub use manifest::{select_replacements, ReplacementManifest};
pub use openapi::{emit_openapi, mapping_from_openapi};
pub use server::{serve_tables, TableApiHandler};

/// Body keys with a reserved meaning.
pub const DNF_KEY: &str = "dnf";
pub const IS_NULL_KEY: &str = "__is_null";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TablegenError {
    #[error("table `{table}` schema mismatch: {message}")]
    SchemaMismatch { table: String, message: String },
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("fraction {0} is outside [0, 1]")]
    InvalidFraction(f64),
    #[error("duplicate route `{0}`")]
    DuplicateRoute(String),
    #[error("{0}")]
    Bind(String),
    #[error("unknown table `{0}`")]
    UnknownTable(String),
}

/// A request the endpoint refuses; rendered as HTTP 400.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("unknown filter key `{0}`")]
    UnknownKey(String),
    #[error("filter value for `{0}` must be a scalar")]
    NotScalar(String),
    #[error("request body must be a JSON object")]
    NotAnObject,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableApiEndpoint {
    pub table: String,
    pub route: String,
    pub columns: Vec<(String, Dtype)>,
    pub rows: Arc<ResultTable>,
}

impl TableApiEndpoint {
    fn column_index(&self, key: &str) -> Option<usize> {
        self.columns.iter().position(|(c, _)| c.eq_ignore_ascii_case(key))
    }

    /// Applies a request body. Filters are ANDed; `=` follows SQL semantics
    /// after coercion to the column's affinity, so a null filter matches nothing.
    pub fn filter(&self, body: &Json) -> Result<ResultTable, FilterError> {
        let obj: &Map<String, Json> = match body {
            Json::Object(o) => o,
            Json::Null => &Map::new(),
            _ => return Err(FilterError::NotAnObject),
        };
        let mut eqs: Vec<(usize, Value)> = Vec::new();
        let mut is_null: Vec<usize> = Vec::new();
        for (k, v) in obj {
            if k == DNF_KEY {
                continue;
            }
            if k == IS_NULL_KEY {
                let names: Vec<&Json> = match v {
                    Json::Array(a) => a.iter().collect(),
                    other => vec![other],
                };
                for n in names {
                    let name = n.as_str().ok_or_else(|| FilterError::NotScalar(IS_NULL_KEY.into()))?;
                    is_null.push(
                        self.column_index(name)
                            .ok_or_else(|| FilterError::UnknownKey(name.into()))?,
                    );
                }
                continue;
            }
            let i = self.column_index(k).ok_or_else(|| FilterError::UnknownKey(k.clone()))?;
            if v.is_object() || v.is_array() {
                return Err(FilterError::NotScalar(k.clone()));
            }
            eqs.push((i, Value::from_json(v).with_affinity(self.columns[i].1)));
        }
        let mut out = ResultTable::new(self.columns.clone());
        for row in &self.rows.rows {
            let keep = is_null.iter().all(|&i| row[i].is_null())
                && eqs
                    .iter()
                    .all(|(i, v)| row[*i].with_affinity(self.columns[*i].1).sql_eq(v).unwrap_or(false));
            if keep {
                out.push_row(row.clone());
            }
        }
        Ok(out)
    }

    pub fn rows_json(table: &ResultTable) -> Json {
        Json::Array(
            table
                .rows
                .iter()
                .map(|r| {
                    Json::Object(
                        table
                            .columns
                            .iter()
                            .zip(r)
                            .map(|((c, _), v)| (c.clone(), v.to_json()))
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

fn check_rows(ddl: &TableDdl, rows: ResultTable) -> Result<ResultTable, TablegenError> {
    let mismatch = |message: String| TablegenError::SchemaMismatch {
        table: ddl.name.clone(),
        message,
    };
    if rows.columns.len() != ddl.columns.len() {
        return Err(mismatch(format!(
            "{} column(s) given, schema has {}",
            rows.columns.len(),
            ddl.columns.len()
        )));
    }
    let mut order = Vec::with_capacity(ddl.columns.len());
    for c in &ddl.columns {
        order.push(
            rows.columns
                .iter()
                .position(|(n, _)| n.eq_ignore_ascii_case(&c.name))
                .ok_or_else(|| mismatch(format!("missing column `{}`", c.name)))?,
        );
    }
    let mut out = ResultTable::new(ddl.columns.iter().map(|c| (c.name.clone(), c.dtype)).collect());
    for (n, row) in rows.rows.iter().enumerate() {
        if row.len() != order.len() {
            return Err(mismatch(format!("row {} has {} value(s)", n + 1, row.len())));
        }
        let mut conformed = Vec::with_capacity(order.len());
        for (c, &pos) in ddl.columns.iter().zip(&order) {
            conformed.push(conform(&row[pos], c.dtype).ok_or_else(|| {
                mismatch(format!(
                    "row {}: {:?} does not fit column `{}` {}",
                    n + 1,
                    row[pos],
                    c.name,
                    c.dtype
                ))
            })?);
        }
        out.push_row(conformed);
    }
    Ok(out)
}

/// Builds the `/<table>` endpoint from one CREATE TABLE statement and its rows.
pub fn generate_endpoint(table_ddl: &str, rows: ResultTable) -> Result<TableApiEndpoint, TablegenError> {
    let mut ddls = parse_ddl(table_ddl)?;
    if ddls.len() != 1 {
        return Err(TablegenError::Schema(SchemaError::Parse {
            element: "table DDL".into(),
            message: format!("expected one CREATE TABLE, found {}", ddls.len()),
        }));
    }
    endpoint_for(&LoadedTable {
        ddl: ddls.remove(0),
        rows,
    })
}

pub fn endpoint_for(table: &LoadedTable) -> Result<TableApiEndpoint, TablegenError> {
    let rows = check_rows(&table.ddl, table.rows.clone())?;
    Ok(TableApiEndpoint {
        table: table.ddl.name.clone(),
        route: format!("/{}", table.ddl.name),
        columns: rows.columns.clone(),
        rows: Arc::new(rows),
    })
}

/// The mapping that exposes `endpoint` as a virtual table. Every column is an
/// optional parameter and an output key.
pub fn endpoint_mapping(endpoint: &TableApiEndpoint, base_url: &str) -> ApiMapping {
    ApiMapping {
        entity: endpoint.table.clone(),
        url: format!("{}{}", base_url.trim_end_matches('/'), endpoint.route),
        method: HttpMethod::Post,
        parameters: endpoint
            .columns
            .iter()
            .map(|(c, d)| ApiParamDef {
                name: c.clone(),
                required: false,
                dtype: *d,
                location: ParamLocation::Body,
            })
            .collect(),
        output_keys: endpoint.columns.iter().map(|(c, _)| c.clone()).collect(),
    }
}

/// Turns the manifest's tables into API entities served at `base_url` and
/// returns the rewritten schema with one mapping per replaced table.
pub fn apply_manifest(
    schema: &AbstractSchema,
    manifest: &ReplacementManifest,
    base_url: &str,
) -> Result<(AbstractSchema, Vec<ApiMapping>), TablegenError> {
    let mut out = schema.clone();
    let mut mappings = Vec::with_capacity(manifest.replaced_tables.len());
    for t in &manifest.replaced_tables {
        let e = out
            .entity_mut(t)
            .filter(|e| e.kind == EntityKind::Table)
            .ok_or_else(|| TablegenError::UnknownTable(t.clone()))?;
        e.kind = EntityKind::Api;
        for a in &mut e.attributes {
            a.direction = Direction::Input;
        }
        let endpoint = TableApiEndpoint {
            table: e.name.clone(),
            route: format!("/{}", e.name),
            columns: e.attributes.iter().map(|a| (a.name.clone(), a.dtype)).collect(),
            rows: Arc::new(ResultTable::default()),
        };
        mappings.push(endpoint_mapping(&endpoint, base_url));
    }
    Ok((out.validate()?, mappings))
}
