//! Embedded execution: base tables in an in-memory SQLite store, virtual
//! tables materialized into TEMP tables, scalar APIs as SQL functions.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rusqlite::functions::FunctionFlags;
use rusqlite::types::{Value as SqlValue, ValueRef};
use rusqlite::Connection;
use thiserror::Error;

use crate::bridge::{BindingSpec, Bridge, BridgeError, InvocationRequest, ScalarRegistry};
use crate::data::{load_database_dir, DataError, DatabaseData};
use crate::schema::{abstract_from_tables, derive_relational_view, RelationalView, SchemaError, TableDdl};
use crate::sql::{bind_with, plan_query, validate_scalar_sql, BindingSource, QueryPlan, SqlError};
use crate::value::{infer_dtype, Dtype, ResultTable, Value};

/// Scalar function name plus argument keys.
type MemoKey = (String, Vec<String>);

pub const DEFAULT_QUERY_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("SQL execution failed in `{statement}`: {message}")]
    Sql { statement: String, message: String },
    #[error(transparent)]
    Plan(#[from] SqlError),
    #[error(transparent)]
    Bridge(#[from] BridgeError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("query exceeded {0:?}")]
    Timeout(Duration),
}

fn sql_err(statement: &str, e: rusqlite::Error) -> ExecError {
    ExecError::Sql {
        statement: statement.to_string(),
        message: e.to_string(),
    }
}

fn quote_ident(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn to_sql(v: &Value) -> SqlValue {
    match v {
        Value::Null => SqlValue::Null,
        Value::Integer(i) => SqlValue::Integer(*i),
        Value::Real(r) => SqlValue::Real(*r),
        Value::Text(s) => SqlValue::Text(s.clone()),
        Value::Boolean(b) => SqlValue::Integer(*b as i64),
    }
}

fn from_sql(v: ValueRef<'_>) -> Value {
    match v {
        ValueRef::Null => Value::Null,
        ValueRef::Integer(i) => Value::Integer(i),
        ValueRef::Real(r) => Value::Real(r),
        ValueRef::Text(t) => Value::Text(String::from_utf8_lossy(t).into_owned()),
        ValueRef::Blob(b) => Value::Text(String::from_utf8_lossy(b).into_owned()),
    }
}

/// One loaded database. Queries on a handle run one at a time.
pub struct Database {
    id: String,
    conn: Mutex<Connection>,
    tables: Vec<TableDdl>,
    view: RelationalView,
    timeout: Duration,
}

impl Database {
    /// Loads every table of `data` except those named in `skip`.
    pub fn from_data(data: &DatabaseData, skip: &[String]) -> Result<Database, ExecError> {
        let conn = Connection::open_in_memory().map_err(|e| sql_err("open", e))?;
        // Foreign keys may name tables that live behind an API instead.
        conn.execute_batch("PRAGMA foreign_keys = OFF")
            .map_err(|e| sql_err("PRAGMA foreign_keys = OFF", e))?;
        let mut tables = Vec::new();
        for t in &data.tables {
            if skip.iter().any(|s| s.eq_ignore_ascii_case(&t.ddl.name)) {
                continue;
            }
            conn.execute_batch(&t.ddl.text).map_err(|e| sql_err(&t.ddl.text, e))?;
            let insert = format!(
                "INSERT INTO {} ({}) VALUES ({})",
                quote_ident(&t.ddl.name),
                t.rows
                    .columns
                    .iter()
                    .map(|(c, _)| quote_ident(c))
                    .collect::<Vec<_>>()
                    .join(", "),
                vec!["?"; t.rows.columns.len()].join(", ")
            );
            insert_rows(&conn, &insert, &t.rows.rows)?;
            tables.push(t.ddl.clone());
        }
        let names: Vec<String> = tables.iter().map(|t| t.name.to_ascii_lowercase()).collect();
        let local: Vec<TableDdl> = tables
            .iter()
            .cloned()
            .map(|mut t| {
                t.foreign_keys
                    .retain(|fk| names.contains(&fk.foreign_table.to_ascii_lowercase()));
                t
            })
            .collect();
        let view = if local.is_empty() {
            RelationalView {
                ddl_text: String::new(),
                tables: Vec::new(),
                virtual_tables: Default::default(),
            }
        } else {
            derive_relational_view(&abstract_from_tables(&local)?, &[])?
        };
        Ok(Database {
            id: data.id.clone(),
            conn: Mutex::new(conn),
            tables,
            view,
            timeout: DEFAULT_QUERY_TIMEOUT,
        })
    }

    /// `schema.sql` plus per-table CSV files.
    pub fn load_dir(dir: &Path) -> Result<Database, ExecError> {
        Self::from_data(&load_database_dir(dir)?, &[])
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// The base tables as a relational view without virtual tables.
    pub fn base_view(&self) -> &RelationalView {
        &self.view
    }

    pub fn table_names(&self) -> Vec<String> {
        self.tables.iter().map(|t| t.name.clone()).collect()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Connection> {
        self.conn.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn row_count(&self, table: &str) -> Result<usize, ExecError> {
        let sql = format!("SELECT count(*) FROM {}", quote_ident(table));
        self.lock()
            .query_row(&sql, [], |r| r.get::<_, i64>(0))
            .map(|n| n as usize)
            .map_err(|e| sql_err(&sql, e))
    }

    pub fn temp_table_count(&self) -> usize {
        self.lock()
            .query_row(
                "SELECT count(*) FROM sqlite_temp_master WHERE type = 'table'",
                [],
                |r| r.get::<_, i64>(0),
            )
            .map(|n| n as usize)
            .unwrap_or(0)
    }

    /// Binds `sql` against the base tables and runs the normalized text.
    pub fn execute_sql(&self, sql: &str) -> Result<ResultTable, ExecError> {
        let parsed = bind_with(sql, &self.view, false)?;
        let conn = self.lock();
        let _guard = Deadline::arm(&conn, self.timeout);
        query(&conn, &parsed.query.to_string(), &self.timeout)
    }

    /// Plans `sql` against `view` and executes the plan.
    pub fn execute_declarative(
        &self,
        sql: &str,
        view: &RelationalView,
        bridge: &Bridge,
    ) -> Result<ResultTable, ExecError> {
        let plan = plan_query(sql, view)?;
        self.execute_plan(&plan, bridge)
    }

    /// Materializes each step into its TEMP table, runs `final_sql`, and
    /// drops every TEMP table whatever the outcome.
    pub fn execute_plan(&self, plan: &QueryPlan, bridge: &Bridge) -> Result<ResultTable, ExecError> {
        let conn = self.lock();
        let started = Instant::now();
        let _guard = Deadline::arm(&conn, self.timeout);
        let mut created: Vec<String> = Vec::new();
        let result = (|| {
            for step in &plan.steps {
                if started.elapsed() > self.timeout {
                    return Err(ExecError::Timeout(self.timeout));
                }
                let binding = match &step.binding {
                    BindingSource::Constant(d) => BindingSpec::Dnf(d.clone()),
                    BindingSource::UnboundOk => BindingSpec::Unbound,
                    BindingSource::Correlated {
                        driving_sql,
                        input_tuple_columns,
                    } => {
                        let driving = query(&conn, driving_sql, &self.timeout)?;
                        BindingSpec::Tuples {
                            columns: input_tuple_columns.clone(),
                            tuples: driving.rows,
                        }
                    }
                };
                let table = bridge.invoke(&InvocationRequest::for_table(&step.virtual_table, binding))?;
                create_temp(&conn, &step.temp_name, &table)?;
                created.push(step.temp_name.clone());
            }
            query(&conn, &plan.final_sql, &self.timeout)
        })();
        for name in created {
            let drop = format!("DROP TABLE IF EXISTS temp.{}", quote_ident(&name));
            if let Err(e) = conn.execute_batch(&drop) {
                log::error!("cannot drop {name}: {e}");
            }
        }
        result
    }

    /// Runs `sql` with every scalar API of `registry` registered as a SQL
    /// function. Calls are memoized per query.
    pub fn execute_scalar_mode(&self, sql: &str, registry: &ScalarRegistry) -> Result<ResultTable, ExecError> {
        validate_scalar_sql(sql, &self.view, &registry.signatures())?;
        let normalized = bind_with(sql, &self.view, false)?.query.to_string();
        let conn = self.lock();
        let registry = Arc::new(registry.clone());
        let memo: Arc<Mutex<HashMap<MemoKey, Value>>> = Arc::default();
        let failure: Arc<Mutex<Option<BridgeError>>> = Arc::default();
        let names: Vec<(String, usize)> = registry
            .signatures()
            .iter()
            .map(|s| (s.name.clone(), s.params.len()))
            .collect();
        for (name, arity) in &names {
            let registry = Arc::clone(&registry);
            let memo = Arc::clone(&memo);
            let failure = Arc::clone(&failure);
            let fname = name.clone();
            conn.create_scalar_function(
                name.as_str(),
                *arity as i32,
                FunctionFlags::SQLITE_UTF8 | FunctionFlags::SQLITE_DETERMINISTIC,
                move |ctx| {
                    let args: Vec<Value> = (0..ctx.len()).map(|i| from_sql(ctx.get_raw(i))).collect();
                    let key = (fname.clone(), args.iter().map(Value::key).collect::<Vec<_>>());
                    if let Some(v) = memo.lock().unwrap_or_else(|p| p.into_inner()).get(&key) {
                        return Ok(to_sql(v));
                    }
                    match registry.invoke_scalar(&fname, &args) {
                        Ok(v) => {
                            memo.lock().unwrap_or_else(|p| p.into_inner()).insert(key, v.clone());
                            Ok(to_sql(&v))
                        }
                        Err(e) => {
                            let msg = e.to_string();
                            failure.lock().unwrap_or_else(|p| p.into_inner()).get_or_insert(e);
                            Err(rusqlite::Error::UserFunctionError(msg.into()))
                        }
                    }
                },
            )
            .map_err(|e| sql_err(name, e))?;
        }
        let _guard = Deadline::arm(&conn, self.timeout);
        let result = query(&conn, &normalized, &self.timeout);
        for (name, arity) in &names {
            let _ = conn.remove_function(name.as_str(), *arity as i32);
        }
        let upstream = failure.lock().unwrap_or_else(|p| p.into_inner()).take();
        match (result, upstream) {
            (Err(_), Some(e)) => Err(ExecError::Bridge(e)),
            (r, _) => r,
        }
    }
}

/// Interrupts statements on `conn` after `timeout`; disarmed on drop.
struct Deadline<'c> {
    conn: &'c Connection,
}

impl<'c> Deadline<'c> {
    fn arm(conn: &'c Connection, timeout: Duration) -> Self {
        let deadline = Instant::now() + timeout;
        let _ = conn.progress_handler(10_000, Some(move || Instant::now() > deadline));
        Deadline { conn }
    }
}

impl Drop for Deadline<'_> {
    fn drop(&mut self) {
        let _ = self.conn.progress_handler(0, None::<fn() -> bool>);
    }
}

fn insert_rows(conn: &Connection, insert: &str, rows: &[Vec<Value>]) -> Result<(), ExecError> {
    conn.execute_batch("BEGIN").map_err(|e| sql_err("BEGIN", e))?;
    let res = (|| {
        let mut stmt = conn.prepare(insert).map_err(|e| sql_err(insert, e))?;
        for row in rows {
            let params: Vec<SqlValue> = row.iter().map(to_sql).collect();
            stmt.execute(rusqlite::params_from_iter(params))
                .map_err(|e| sql_err(insert, e))?;
        }
        Ok(())
    })();
    let end = if res.is_ok() { "COMMIT" } else { "ROLLBACK" };
    conn.execute_batch(end).map_err(|e| sql_err(end, e))?;
    res
}

fn create_temp(conn: &Connection, name: &str, table: &ResultTable) -> Result<(), ExecError> {
    let cols: Vec<String> = table
        .columns
        .iter()
        .map(|(c, d)| format!("{} {}", quote_ident(c), d.sql_name()))
        .collect();
    let ddl = format!("CREATE TEMP TABLE {} ({})", quote_ident(name), cols.join(", "));
    conn.execute_batch(&ddl).map_err(|e| sql_err(&ddl, e))?;
    let insert = format!(
        "INSERT INTO temp.{} VALUES ({})",
        quote_ident(name),
        vec!["?"; table.columns.len()].join(", ")
    );
    insert_rows(conn, &insert, &table.rows)
}

fn query(conn: &Connection, sql: &str, timeout: &Duration) -> Result<ResultTable, ExecError> {
    let mut stmt = conn.prepare(sql).map_err(|e| sql_err(sql, e))?;
    let decl: Vec<Option<Dtype>> = stmt
        .columns()
        .iter()
        .map(|c| c.decl_type().and_then(Dtype::from_sql_type))
        .collect();
    let names: Vec<String> = stmt.column_names().into_iter().map(str::to_string).collect();
    let n = names.len();
    let mut rows: Vec<Vec<Value>> = Vec::new();
    let mut cursor = stmt.query([]).map_err(|e| sql_err(sql, e))?;
    loop {
        match cursor.next() {
            Ok(Some(r)) => {
                let mut row = Vec::with_capacity(n);
                for (i, d) in decl.iter().enumerate() {
                    let v = from_sql(r.get_ref(i).map_err(|e| sql_err(sql, e))?);
                    row.push(match (d, v) {
                        (Some(Dtype::Boolean), Value::Integer(i @ (0 | 1))) => Value::Boolean(i == 1),
                        (_, v) => v,
                    });
                }
                rows.push(row);
            }
            Ok(None) => break,
            Err(rusqlite::Error::SqliteFailure(f, _)) if f.code == rusqlite::ErrorCode::OperationInterrupted => {
                return Err(ExecError::Timeout(*timeout))
            }
            Err(e) => return Err(sql_err(sql, e)),
        }
    }
    let columns = names
        .into_iter()
        .enumerate()
        .map(|(j, name)| {
            let dtype = decl[j]
                .or_else(|| rows.iter().map(|r| &r[j]).find(|v| !v.is_null()).map(infer_dtype))
                .unwrap_or(Dtype::Text);
            (name, dtype)
        })
        .collect();
    Ok(ResultTable { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse_table_csv;
    use crate::data::LoadedTable;
    use crate::schema::parse_ddl;

    fn museum_db() -> Database {
        let ddl = parse_ddl(crate::testutil::MUSEUM_DDL).unwrap();
        let csv = [
            "Museum_ID,Name,Num_of_Staff,Open_Year\n1,Plaza Museum,62,2000\n2,Capital Plaza Museum,25,2012\n",
            "",
            "",
        ];
        let tables = ddl
            .into_iter()
            .zip(csv)
            .map(|(d, c)| {
                let rows = parse_table_csv(&d, c).unwrap();
                LoadedTable { ddl: d, rows }
            })
            .collect();
        Database::from_data(
            &DatabaseData {
                id: "museum_visit".into(),
                ddl_text: crate::testutil::MUSEUM_DDL.into(),
                tables,
            },
            &[],
        )
        .unwrap()
    }

    #[test]
    fn plain_sql_with_double_quoted_string() {
        let db = museum_db();
        assert_eq!(db.table_names(), vec!["museum", "visitor", "visit"]);
        let t = db
            .execute_sql("SELECT Num_of_Staff, Open_Year FROM museum WHERE name = \"Plaza Museum\"")
            .unwrap();
        assert_eq!(t.rows, vec![vec![Value::Integer(62), Value::Text("2000".into())]]);
        assert_eq!(db.row_count("visit").unwrap(), 0);
    }

    #[test]
    fn zero_step_plan_equals_plain_sql() {
        let db = museum_db();
        let sql = "SELECT name FROM museum ORDER BY Museum_ID";
        let plan = plan_query(sql, db.base_view()).unwrap();
        assert!(plan.steps.is_empty());
        let a = db.execute_plan(&plan, &Bridge::default()).unwrap();
        assert_eq!(a.rows, db.execute_sql(sql).unwrap().rows);
    }

    #[test]
    fn scalar_functions_and_nulls() {
        let db = museum_db();
        let r = ScalarRegistry::local();
        let t = db
            .execute_scalar_mode("SELECT is_prime(7), count_syllables(NULL)", &r)
            .unwrap();
        assert_eq!(t.rows, vec![vec![Value::Integer(1), Value::Null]]);
        let t = db
            .execute_scalar_mode("SELECT name FROM museum WHERE is_square(Num_of_Staff) = true", &r)
            .unwrap();
        assert_eq!(t.rows, vec![vec![Value::Text("Capital Plaza Museum".into())]]);
    }

    #[test]
    fn sql_errors_name_the_statement() {
        let db = museum_db();
        let err = db.execute_sql("SELECT nope FROM museum").unwrap_err();
        assert!(matches!(err, ExecError::Plan(_)));
        let err = db
            .execute_scalar_mode("SELECT frob(1)", &ScalarRegistry::local())
            .unwrap_err();
        assert!(matches!(err, ExecError::Plan(SqlError::UnknownFunction(_))));
    }
}
