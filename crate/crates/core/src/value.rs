//! Scalar values, the four-type lattice, and result tables.

use std::cmp::Ordering;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Column data type. Richer SQL types are folded onto these four.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    Integer,
    Real,
    Text,
    Boolean,
}

impl Dtype {
    /// Maps a SQL type name (`int`, `varchar(20)`, `double`, ...) onto the lattice.
    pub fn from_sql_type(name: &str) -> Option<Dtype> {
        let lower = name.trim().to_ascii_lowercase();
        let base = lower.split(['(', ' ']).next().unwrap_or("");
        match base {
            "int" | "integer" | "bigint" | "smallint" | "tinyint" | "mediumint" | "int2" | "int8" => {
                Some(Dtype::Integer)
            }
            "real" | "float" | "double" | "numeric" | "decimal" | "number" => Some(Dtype::Real),
            "text" | "varchar" | "char" | "nvarchar" | "nchar" | "string" | "clob" | "date" | "datetime"
            | "timestamp" | "time" | "character" | "varying" => Some(Dtype::Text),
            "bool" | "boolean" | "bit" => Some(Dtype::Boolean),
            _ => None,
        }
    }

    pub fn sql_name(self) -> &'static str {
        match self {
            Dtype::Integer => "INTEGER",
            Dtype::Real => "REAL",
            Dtype::Text => "TEXT",
            Dtype::Boolean => "BOOLEAN",
        }
    }

    /// JSON-schema type name used in generated OpenAPI documents.
    pub fn json_type(self) -> &'static str {
        match self {
            Dtype::Integer => "integer",
            Dtype::Real => "number",
            Dtype::Text => "string",
            Dtype::Boolean => "boolean",
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, Dtype::Integer | Dtype::Real | Dtype::Boolean)
    }
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dtype::Integer => "integer",
            Dtype::Real => "real",
            Dtype::Text => "text",
            Dtype::Boolean => "boolean",
        })
    }
}

/// A single cell value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
    Boolean(bool),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Integer(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            Value::Boolean(b) => Some(if *b { 1.0 } else { 0.0 }),
            _ => None,
        }
    }

    pub fn from_json(v: &serde_json::Value) -> Value {
        match v {
            serde_json::Value::Null => Value::Null,
            serde_json::Value::Bool(b) => Value::Boolean(*b),
            serde_json::Value::Number(n) => match n.as_i64() {
                Some(i) => Value::Integer(i),
                None => Value::Real(n.as_f64().unwrap_or(f64::NAN)),
            },
            serde_json::Value::String(s) => Value::Text(s.clone()),
            other => Value::Text(other.to_string()),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Null => serde_json::Value::Null,
            Value::Integer(i) => (*i).into(),
            Value::Real(r) => serde_json::Number::from_f64(*r)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Value::Text(s) => s.clone().into(),
            Value::Boolean(b) => (*b).into(),
        }
    }

    /// Renders the value the way SQLite casts it to text.
    pub fn to_text(&self) -> Option<String> {
        match self {
            Value::Null => None,
            Value::Integer(i) => Some(i.to_string()),
            Value::Real(r) => Some(format_real(*r)),
            Value::Text(s) => Some(s.clone()),
            Value::Boolean(b) => Some(if *b { "1" } else { "0" }.to_string()),
        }
    }

    /// Converts a value to the given dtype following SQLite column-affinity rules.
    /// Values that cannot be converted are returned unchanged.
    pub fn with_affinity(&self, dtype: Dtype) -> Value {
        match (self, dtype) {
            (Value::Null, _) => Value::Null,
            (Value::Boolean(b), Dtype::Real) => Value::Real(*b as i64 as f64),
            (Value::Boolean(b), Dtype::Integer | Dtype::Boolean) => Value::Integer(*b as i64),
            (Value::Text(s), Dtype::Real) => match parse_numeric(s) {
                Some(Value::Integer(i)) => Value::Real(i as f64),
                Some(v) => v,
                None => self.clone(),
            },
            (Value::Text(s), Dtype::Integer | Dtype::Boolean) => parse_numeric(s).unwrap_or_else(|| self.clone()),
            (Value::Real(r), Dtype::Integer | Dtype::Boolean) => {
                if r.fract() == 0.0 && r.abs() < 9.2e18 {
                    Value::Integer(*r as i64)
                } else {
                    self.clone()
                }
            }
            (Value::Integer(i), Dtype::Real) => Value::Real(*i as f64),
            (Value::Integer(_) | Value::Real(_) | Value::Boolean(_), Dtype::Text) => {
                Value::Text(self.to_text().unwrap_or_default())
            }
            _ => self.clone(),
        }
    }

    /// SQL `=` between two already-affinitized values. `None` when either side is null.
    pub fn sql_eq(&self, other: &Value) -> Option<bool> {
        if self.is_null() || other.is_null() {
            return None;
        }
        match (self.as_f64(), other.as_f64()) {
            (Some(a), Some(b)) => Some(a == b),
            (None, None) => Some(self.to_text() == other.to_text()),
            _ => Some(false),
        }
    }

    /// Total order used for sorting rows: null < numbers < text.
    pub fn total_cmp(&self, other: &Value) -> Ordering {
        fn rank(v: &Value) -> u8 {
            match v {
                Value::Null => 0,
                Value::Integer(_) | Value::Real(_) | Value::Boolean(_) => 1,
                Value::Text(_) => 2,
            }
        }
        match rank(self).cmp(&rank(other)) {
            Ordering::Equal => {}
            o => return o,
        }
        match (self, other) {
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            (Value::Null, Value::Null) => Ordering::Equal,
            _ => self.as_f64().unwrap_or(0.0).total_cmp(&other.as_f64().unwrap_or(0.0)),
        }
    }

    /// Hashable key identifying a value exactly (integers and integral reals coincide).
    pub fn key(&self) -> String {
        match self {
            Value::Null => "n".into(),
            Value::Integer(i) => format!("i{i}"),
            Value::Real(r) if r.fract() == 0.0 && r.abs() < 9.2e18 => format!("i{}", *r as i64),
            Value::Real(r) => format!("r{}", r.to_bits()),
            Value::Boolean(b) => format!("i{}", *b as i64),
            Value::Text(s) => format!("t{s}"),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Text(s) => write!(f, "'{}'", s.replace('\'', "''")),
            Value::Boolean(b) => f.write_str(if *b { "true" } else { "false" }),
            v => f.write_str(&v.to_text().unwrap_or_default()),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        if v.is_array() || v.is_object() {
            return Err(D::Error::custom("expected a scalar value"));
        }
        Ok(Value::from_json(&v))
    }
}

pub(crate) fn format_real(r: f64) -> String {
    if r.is_finite() && r.fract() == 0.0 && r.abs() < 1e15 {
        format!("{r:.1}")
    } else {
        format!("{r}")
    }
}

pub(crate) fn parse_numeric(s: &str) -> Option<Value> {
    let t = s.trim();
    if t.is_empty() {
        return None;
    }
    if let Ok(i) = t.parse::<i64>() {
        return Some(Value::Integer(i));
    }
    match t.parse::<f64>() {
        Ok(r) if r.is_finite() => Some(Value::Real(r)),
        _ => None,
    }
}

/// Named, typed columns plus rows of scalar-or-null values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub columns: Vec<(String, Dtype)>,
    pub rows: Vec<Vec<Value>>,
}

impl ResultTable {
    pub fn new(columns: Vec<(String, Dtype)>) -> Self {
        ResultTable {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|(n, _)| n.eq_ignore_ascii_case(name))
    }

    pub fn push_row(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "columns": self.column_names(),
            "rows": self
                .rows
                .iter()
                .map(|r| r.iter().map(Value::to_json).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }

    /// Reads `{columns:[...], rows:[[...]]}`. Column dtypes are inferred from the
    /// first non-null value of each column.
    pub fn from_json(v: &serde_json::Value) -> Result<ResultTable, String> {
        let cols = v
            .get("columns")
            .and_then(|c| c.as_array())
            .ok_or("missing `columns` array")?;
        let rows = v.get("rows").and_then(|r| r.as_array()).ok_or("missing `rows` array")?;
        let names: Vec<String> = cols
            .iter()
            .map(|c| match c {
                serde_json::Value::String(s) => Ok(s.clone()),
                serde_json::Value::Object(o) => o
                    .get("name")
                    .and_then(|n| n.as_str())
                    .map(str::to_string)
                    .ok_or_else(|| "column object without name".to_string()),
                _ => Err("column entries must be strings".to_string()),
            })
            .collect::<Result<_, _>>()?;
        let mut table_rows = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            let arr = r.as_array().ok_or(format!("row {i} is not an array"))?;
            if arr.len() != names.len() {
                return Err(format!("row {i} has {} values, expected {}", arr.len(), names.len()));
            }
            table_rows.push(arr.iter().map(Value::from_json).collect::<Vec<_>>());
        }
        let columns = names
            .into_iter()
            .enumerate()
            .map(|(j, n)| {
                let dtype = table_rows
                    .iter()
                    .map(|r: &Vec<Value>| &r[j])
                    .find(|v| !v.is_null())
                    .map(infer_dtype)
                    .unwrap_or(Dtype::Text);
                (n, dtype)
            })
            .collect();
        Ok(ResultTable {
            columns,
            rows: table_rows,
        })
    }
}

pub(crate) fn infer_dtype(v: &Value) -> Dtype {
    match v {
        Value::Integer(_) => Dtype::Integer,
        Value::Real(_) => Dtype::Real,
        Value::Boolean(_) => Dtype::Boolean,
        _ => Dtype::Text,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sql_type_folding() {
        assert_eq!(Dtype::from_sql_type("int"), Some(Dtype::Integer));
        assert_eq!(Dtype::from_sql_type("VARCHAR(255)"), Some(Dtype::Text));
        assert_eq!(Dtype::from_sql_type("double precision"), Some(Dtype::Real));
        assert_eq!(Dtype::from_sql_type("bool"), Some(Dtype::Boolean));
        assert_eq!(Dtype::from_sql_type("blob"), None);
    }

    #[test]
    fn affinity_matches_sqlite() {
        assert_eq!(
            Value::Text("12".into()).with_affinity(Dtype::Integer),
            Value::Integer(12)
        );
        assert_eq!(
            Value::Integer(2000).with_affinity(Dtype::Text),
            Value::Text("2000".into())
        );
        assert_eq!(
            Value::Real(2000.0).with_affinity(Dtype::Text),
            Value::Text("2000.0".into())
        );
        assert_eq!(
            Value::Text("abc".into()).with_affinity(Dtype::Real),
            Value::Text("abc".into())
        );
    }

    #[test]
    fn sql_eq_null_and_cross_kind() {
        assert_eq!(Value::Null.sql_eq(&Value::Null), None);
        assert_eq!(Value::Integer(5).sql_eq(&Value::Real(5.0)), Some(true));
        assert_eq!(Value::Integer(5).sql_eq(&Value::Text("5".into())), Some(false));
    }

    #[test]
    fn result_table_json_roundtrip() {
        let mut t = ResultTable::new(vec![("a".into(), Dtype::Integer), ("b".into(), Dtype::Text)]);
        t.push_row(vec![Value::Integer(1), Value::Text("x".into())]);
        t.push_row(vec![Value::Null, Value::Text("y".into())]);
        let back = ResultTable::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
    }
}
