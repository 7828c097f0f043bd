//! Benchmark records, the question runner, and replacement sweeps.

mod compare;
mod sweep;
mod translator;

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bridge::{Bridge, ScalarRegistry};
use crate::data::DatabaseData;
use crate::executor::{Database, ExecError};
use crate::scalar::{attach_scalar_apis, signatures};
use crate::schema::{abstract_from_tables, derive_relational_view, RelationalView};
use crate::sql::{parse_query_text, SqlError};
use crate::value::{infer_dtype, Dtype, ResultTable, Value};

pub use compare::{rows_match, values_equal, MatchResult, ABS_TOL, REL_TOL};
pub use sweep::{sweep_replacement, SweepPoint, SweepResult};
pub use translator::{Mode, Translator, TranslatorSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    #[serde(alias = "QuestionID")]
    pub question_id: String,
    pub db_id: String,
    pub question: String,
    #[serde(default)]
    pub gold_sql: Option<String>,
    #[serde(default)]
    pub gold_columns: Option<Vec<String>>,
    #[serde(default)]
    pub gold_rows: Vec<Vec<Value>>,
    #[serde(default)]
    pub produces_rows: bool,
}

impl BenchmarkRecord {
    pub fn gold_table(&self) -> ResultTable {
        let width = self
            .gold_columns
            .as_ref()
            .map(Vec::len)
            .or_else(|| self.gold_rows.first().map(Vec::len))
            .unwrap_or(0);
        let columns = (0..width)
            .map(|j| {
                let name = self
                    .gold_columns
                    .as_ref()
                    .and_then(|c| c.get(j).cloned())
                    .unwrap_or_else(|| format!("c{j}"));
                let dtype = self
                    .gold_rows
                    .iter()
                    .filter_map(|r| r.get(j))
                    .find(|v| !v.is_null())
                    .map(infer_dtype)
                    .unwrap_or(Dtype::Text);
                (name, dtype)
            })
            .collect();
        ResultTable {
            columns,
            rows: self.gold_rows.clone(),
        }
    }

    /// Order matters only when the gold SQL sorts at the top level.
    pub fn ordered(&self) -> bool {
        self.gold_sql
            .as_deref()
            .and_then(|s| parse_query_text(s).ok())
            .is_some_and(|q| !q.order_by.is_empty())
    }
}

/// Reads JSON Lines, skipping blank lines.
pub fn load_records(path: &Path) -> Result<Vec<BenchmarkRecord>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_records(&text)
}

pub fn parse_records(text: &str) -> Result<Vec<BenchmarkRecord>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let r: BenchmarkRecord = serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1))?;
            if r.produces_rows != !r.gold_rows.is_empty() {
                return Err(format!("line {}: produces_rows disagrees with gold_rows", i + 1));
            }
            Ok(r)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub question_id: String,
    pub matched: bool,
    pub reason: String,
    /// Wall-clock seconds; not reproducible across runs.
    pub elapsed: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sql: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub accuracy: Option<f64>,
    pub matched: usize,
    pub n: usize,
    pub mean_elapsed_s: f64,
    pub no_questions: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub summary: Summary,
    pub outcomes: Vec<EvalOutcome>,
}

impl BenchReport {
    pub fn from_outcomes(outcomes: Vec<EvalOutcome>) -> Self {
        let n = outcomes.len();
        let matched = outcomes.iter().filter(|o| o.matched).count();
        let total: f64 = outcomes.iter().map(|o| o.elapsed).sum();
        BenchReport {
            summary: Summary {
                accuracy: (n > 0).then(|| matched as f64 / n as f64),
                matched,
                n,
                mean_elapsed_s: if n > 0 { total / n as f64 } else { 0.0 },
                no_questions: n == 0,
            },
            outcomes,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "summary": self.summary,
            "outcomes": self.outcomes,
            "nondeterministic_fields": ["summary.mean_elapsed_s", "outcomes[].elapsed"],
        })
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json()).expect("report serializes");
        std::fs::write(path, text + "\n")
    }
}

/// One database as seen by the runner.
pub struct DbEnv {
    pub db: Arc<Database>,
    pub view: RelationalView,
    pub schema_text: String,
}

impl DbEnv {
    /// All tables local; the view has no virtual tables.
    pub fn plain(data: &DatabaseData) -> Result<DbEnv, ExecError> {
        let db = Database::from_data(data, &[])?;
        let view = db.base_view().clone();
        Ok(DbEnv {
            schema_text: view.ddl_text.clone(),
            db: Arc::new(db),
            view,
        })
    }

    /// All tables local plus every scalar API as a virtual table served at
    /// `scalar_base_url`. The schema text lists the API descriptions.
    pub fn with_scalar_apis(data: &DatabaseData, scalar_base_url: &str) -> Result<DbEnv, ExecError> {
        let db = Database::from_data(data, &[])?;
        let ddls: Vec<_> = data.tables.iter().map(|t| t.ddl.clone()).collect();
        let mut schema = abstract_from_tables(&ddls)?;
        let mappings = attach_scalar_apis(&mut schema, scalar_base_url);
        let view = derive_relational_view(&schema, &mappings)?;
        let mut schema_text = data.ddl_text.trim_end().to_string();
        schema_text.push_str("\n\n");
        for s in signatures() {
            schema_text.push_str(&s.describe());
        }
        Ok(DbEnv {
            db: Arc::new(db),
            view,
            schema_text,
        })
    }
}

/// Databases plus the shared bridge and scalar registry.
pub struct EvalEnv {
    pub dbs: HashMap<String, DbEnv>,
    pub bridge: Bridge,
    pub scalars: ScalarRegistry,
}

impl EvalEnv {
    pub fn new(bridge: Bridge, scalars: ScalarRegistry) -> Self {
        EvalEnv {
            dbs: HashMap::new(),
            bridge,
            scalars,
        }
    }

    pub fn add(&mut self, db_id: &str, env: DbEnv) {
        self.dbs.insert(db_id.to_string(), env);
    }

    /// Executes `sql` on `db_id` through `mode`.
    pub fn execute(&self, db_id: &str, sql: &str, mode: Mode) -> Result<ResultTable, ExecError> {
        let env = self.dbs.get(db_id).ok_or_else(|| ExecError::Sql {
            statement: sql.to_string(),
            message: format!("database `{db_id}` is not loaded"),
        })?;
        match mode {
            Mode::Declarative => env.db.execute_declarative(sql, &env.view, &self.bridge),
            Mode::Declarative2 => env.db.execute_scalar_mode(sql, &self.scalars),
        }
    }
}

/// Evaluates one record. Every failure becomes a non-match with a reason.
pub fn evaluate_record(record: &BenchmarkRecord, spec: &TranslatorSpec, env: &EvalEnv) -> EvalOutcome {
    let started = Instant::now();
    let done = |matched: bool, reason: String, sql: Option<String>| EvalOutcome {
        question_id: record.question_id.clone(),
        matched,
        reason,
        elapsed: started.elapsed().as_secs_f64(),
        sql,
    };
    let Some(db) = env.dbs.get(&record.db_id) else {
        return done(false, format!("database `{}` is not loaded", record.db_id), None);
    };
    let sql = match spec.translator.translate(record, &db.schema_text, spec.mode) {
        Ok(s) => s,
        Err(e) => return done(false, format!("translation/parse failure: {e}"), None),
    };
    let pred = match env.execute(&record.db_id, &sql, spec.mode) {
        Ok(t) => t,
        Err(ExecError::Plan(e @ SqlError::Syntax { .. })) => {
            return done(false, format!("translation/parse failure: {e}"), Some(sql))
        }
        Err(e) => return done(false, format!("execution failure: {e}"), Some(sql)),
    };
    let m = rows_match(&record.gold_table(), &pred, record.ordered());
    done(m.matched, m.reason, Some(sql))
}

/// Runs every record in input order and summarizes accuracy.
pub fn run_benchmark(records: &[BenchmarkRecord], spec: &TranslatorSpec, env: &EvalEnv) -> BenchReport {
    let outcomes = records
        .iter()
        .map(|r| {
            let o = evaluate_record(r, spec, env);
            if o.matched {
                log::info!("{}: match", o.question_id);
            } else {
                log::warn!("{}: {}", o.question_id, o.reason);
            }
            o
        })
        .collect();
    BenchReport::from_outcomes(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_run_flags_no_questions() {
        let env = EvalEnv::new(Bridge::default(), ScalarRegistry::local());
        let spec = TranslatorSpec {
            translator: Translator::GoldOracle(HashMap::new()),
            mode: Mode::Declarative,
        };
        let r = run_benchmark(&[], &spec, &env);
        assert_eq!(r.summary.accuracy, None);
        assert!(r.summary.no_questions);
        assert_eq!(r.to_json()["summary"]["n"], 0);
    }

    #[test]
    fn record_parsing_and_ordering() {
        let recs = parse_records(
            r#"{"QuestionID":"m.1","db_id":"m","question":"q","gold_sql":"SELECT a FROM t ORDER BY a","gold_rows":[[1]],"produces_rows":true}

{"question_id":"m.2","db_id":"m","question":"q","gold_sql":"SELECT a FROM (SELECT a FROM t ORDER BY a)","gold_rows":[[1]],"produces_rows":true}"#,
        )
        .unwrap();
        assert!(recs[0].ordered());
        assert!(!recs[1].ordered());
        assert_eq!(recs[0].gold_table().columns[0].0, "c0");
        assert!(
            parse_records(r#"{"question_id":"x","db_id":"m","question":"q","gold_rows":[],"produces_rows":true}"#)
                .is_err()
        );
    }

    #[test]
    fn unknown_database_is_a_non_match() {
        let env = EvalEnv::new(Bridge::default(), ScalarRegistry::local());
        let rec = BenchmarkRecord {
            question_id: "x.1".into(),
            db_id: "x".into(),
            question: "q".into(),
            gold_sql: Some("SELECT 1".into()),
            gold_columns: None,
            gold_rows: vec![vec![Value::Integer(1)]],
            produces_rows: true,
        };
        let spec = TranslatorSpec {
            translator: Translator::from_records(std::slice::from_ref(&rec)),
            mode: Mode::Declarative,
        };
        let o = evaluate_record(&rec, &spec, &env);
        assert!(!o.matched);
        assert!(o.reason.contains("not loaded"));
    }
}
