//! Database directories: a `schema.sql` plus one `<table>.csv` per table,
//! header row first.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::schema::{parse_ddl, SchemaError, TableDdl};
use crate::value::{parse_numeric, Dtype, ResultTable, Value};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("{table}: schema mismatch at row {row}: {message}")]
    SchemaMismatch { table: String, row: usize, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// One table's definition and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTable {
    pub ddl: TableDdl,
    pub rows: ResultTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatabaseData {
    pub id: String,
    pub ddl_text: String,
    pub tables: Vec<LoadedTable>,
}

impl DatabaseData {
    pub fn table(&self, name: &str) -> Option<&LoadedTable> {
        self.tables.iter().find(|t| t.ddl.name.eq_ignore_ascii_case(name))
    }

    pub fn table_names(&self) -> Vec<String> {
        self.tables.iter().map(|t| t.ddl.name.clone()).collect()
    }
}

/// Converts one CSV cell to the column's dtype. Empty cells are null.
pub fn parse_cell(raw: &str, dtype: Dtype) -> Result<Value, String> {
    if raw.is_empty() {
        return Ok(Value::Null);
    }
    let t = raw.trim();
    match dtype {
        Dtype::Text => Ok(Value::Text(raw.to_string())),
        Dtype::Integer => match parse_numeric(t) {
            Some(Value::Integer(i)) => Ok(Value::Integer(i)),
            Some(Value::Real(r)) if r.fract() == 0.0 && r.abs() < 9.2e18 => Ok(Value::Integer(r as i64)),
            _ => Err(format!("`{raw}` is not an integer")),
        },
        Dtype::Real => match parse_numeric(t) {
            Some(v) => Ok(Value::Real(v.as_f64().unwrap_or_default())),
            None => Err(format!("`{raw}` is not a number")),
        },
        Dtype::Boolean => match t.to_ascii_lowercase().as_str() {
            "1" | "true" | "t" => Ok(Value::Boolean(true)),
            "0" | "false" | "f" => Ok(Value::Boolean(false)),
            _ => Err(format!("`{raw}` is not a boolean")),
        },
    }
}

/// Checks that `v` fits a column of `dtype`, normalizing integers in real
/// columns and 0/1 in boolean columns.
pub fn conform(v: &Value, dtype: Dtype) -> Option<Value> {
    match (v, dtype) {
        (Value::Null, _) => Some(Value::Null),
        (Value::Integer(_), Dtype::Integer) | (Value::Text(_), Dtype::Text) | (Value::Boolean(_), Dtype::Boolean) => {
            Some(v.clone())
        }
        (Value::Real(r), Dtype::Real) => Some(Value::Real(*r)),
        (Value::Integer(i), Dtype::Real) => Some(Value::Real(*i as f64)),
        (Value::Integer(i @ (0 | 1)), Dtype::Boolean) => Some(Value::Boolean(*i == 1)),
        _ => None,
    }
}

/// Reads CSV text for `ddl`. Header names must equal the DDL columns
/// (case-insensitive, any order).
pub fn parse_table_csv(ddl: &TableDdl, text: &str) -> Result<ResultTable, DataError> {
    let mismatch = |row: usize, message: String| DataError::SchemaMismatch {
        table: ddl.name.clone(),
        row,
        message,
    };
    let mut table = ResultTable::new(ddl.columns.iter().map(|c| (c.name.clone(), c.dtype)).collect());
    if text.trim().is_empty() {
        return Ok(table);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| DataError::Parse(e.to_string()))?.clone();
    if headers.len() != ddl.columns.len() {
        return Err(mismatch(
            0,
            format!(
                "header has {} column(s), schema has {}",
                headers.len(),
                ddl.columns.len()
            ),
        ));
    }
    let mut order = Vec::with_capacity(headers.len());
    for c in &ddl.columns {
        let pos = headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(&c.name))
            .ok_or_else(|| mismatch(0, format!("header lacks column `{}`", c.name)))?;
        order.push(pos);
    }
    for (i, rec) in reader.records().enumerate() {
        let row_no = i + 1;
        let rec = rec.map_err(|e| DataError::Parse(format!("{}: {e}", ddl.name)))?;
        if rec.len() != ddl.columns.len() {
            return Err(mismatch(
                row_no,
                format!("{} value(s), expected {}", rec.len(), ddl.columns.len()),
            ));
        }
        let row = ddl
            .columns
            .iter()
            .zip(&order)
            .map(|(c, &pos)| {
                parse_cell(&rec[pos], c.dtype).map_err(|m| mismatch(row_no, format!("column `{}`: {m}", c.name)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        table.push_row(row);
    }
    Ok(table)
}

fn read(path: &Path) -> Result<String, DataError> {
    std::fs::read_to_string(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Loads `<dir>/schema.sql` and every `<dir>/<table>.csv`. A missing CSV
/// loads as an empty table.
pub fn load_database_dir(dir: &Path) -> Result<DatabaseData, DataError> {
    let ddl_text = read(&dir.join("schema.sql"))?;
    let ddls = parse_ddl(&ddl_text)?;
    let mut tables = Vec::with_capacity(ddls.len());
    for ddl in ddls {
        let path = csv_path(dir, &ddl.name);
        let rows = match path {
            Some(p) => parse_table_csv(&ddl, &read(&p)?)?,
            None => ResultTable::new(ddl.columns.iter().map(|c| (c.name.clone(), c.dtype)).collect()),
        };
        tables.push(LoadedTable { ddl, rows });
    }
    let id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(DatabaseData { id, ddl_text, tables })
}

fn csv_path(dir: &Path, table: &str) -> Option<PathBuf> {
    let exact = dir.join(format!("{table}.csv"));
    if exact.is_file() {
        return Some(exact);
    }
    let want = format!("{}.csv", table.to_ascii_lowercase());
    std::fs::read_dir(dir)
        .ok()?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .find(|p| {
            p.file_name()
                .is_some_and(|n| n.to_string_lossy().to_ascii_lowercase() == want)
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn museum() -> TableDdl {
        parse_ddl("CREATE TABLE museum (Museum_ID int, Name text, Num_of_Staff int, Open_Year text)")
            .unwrap()
            .remove(0)
    }

    #[test]
    fn typed_cells_and_header_order() {
        let t = parse_table_csv(
            &museum(),
            "Name,Museum_ID,Open_Year,Num_of_Staff\nPlaza Museum,1,2000,62\n,2,,\n",
        )
        .unwrap();
        assert_eq!(
            t.rows[0],
            vec![
                Value::Integer(1),
                Value::Text("Plaza Museum".into()),
                Value::Integer(62),
                Value::Text("2000".into())
            ]
        );
        assert_eq!(t.rows[1][1], Value::Null);
    }

    #[test]
    fn empty_file_is_empty_table() {
        assert!(parse_table_csv(&museum(), "").unwrap().rows.is_empty());
    }

    #[test]
    fn wrong_arity_names_the_row() {
        let err = parse_table_csv(&museum(), "Museum_ID,Name,Num_of_Staff,Open_Year\n1,a,2,x\n2,b\n").unwrap_err();
        assert!(matches!(err, DataError::SchemaMismatch { row: 2, .. }), "{err}");
    }

    #[test]
    fn bad_integer_is_mismatch() {
        let err = parse_table_csv(&museum(), "Museum_ID,Name,Num_of_Staff,Open_Year\nx,a,2,x\n").unwrap_err();
        assert!(matches!(err, DataError::SchemaMismatch { row: 1, .. }));
    }

    #[test]
    fn conform_rules() {
        assert_eq!(conform(&Value::Integer(3), Dtype::Real), Some(Value::Real(3.0)));
        assert_eq!(conform(&Value::Integer(1), Dtype::Boolean), Some(Value::Boolean(true)));
        assert_eq!(conform(&Value::Real(1.5), Dtype::Integer), None);
        assert_eq!(conform(&Value::Text("1".into()), Dtype::Integer), None);
    }
}
