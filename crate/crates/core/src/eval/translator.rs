use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::BenchmarkRecord;

/// Which execution path a translated query takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Virtual tables planned into API materialization steps.
    Declarative,
    /// Scalar APIs called as SQL functions.
    Declarative2,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "declarative" | "qr" => Ok(Mode::Declarative),
            "declarative2" | "sl" => Ok(Mode::Declarative2),
            other => Err(format!("unknown mode `{other}` (declarative | declarative2)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Declarative => "declarative",
            Mode::Declarative2 => "declarative2",
        })
    }
}

#[derive(Debug, Clone)]
pub enum Translator {
    /// Fixed SQL per question id.
    GoldOracle(HashMap<String, String>),
    /// `POST <url>` with `{question, schema_text, mode}` answering `{sql}`.
    RemoteService { url: String, timeout: Duration },
}

#[derive(Debug, Clone)]
pub struct TranslatorSpec {
    pub translator: Translator,
    pub mode: Mode,
}

impl Translator {
    /// Oracle from each record's `gold_sql`.
    pub fn from_records(records: &[BenchmarkRecord]) -> Translator {
        Translator::GoldOracle(
            records
                .iter()
                .filter_map(|r| r.gold_sql.clone().map(|s| (r.question_id.clone(), s)))
                .collect(),
        )
    }

    /// Oracle from a JSON object `{question_id: sql}`.
    pub fn from_file(path: &Path) -> Result<Translator, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let map: HashMap<String, String> =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(Translator::GoldOracle(map))
    }

    /// A remote service; `url` may name the service root or `/translate` itself.
    pub fn remote(url: &str) -> Result<Translator, String> {
        let parsed = url::Url::parse(url).map_err(|e| format!("invalid translator url `{url}`: {e}"))?;
        if !matches!(parsed.scheme(), "http" | "https") {
            return Err(format!("translator url `{url}` is not HTTP"));
        }
        let url = if parsed.path().trim_end_matches('/').ends_with("/translate") {
            url.to_string()
        } else {
            format!("{}/translate", url.trim_end_matches('/'))
        };
        Ok(Translator::RemoteService {
            url,
            timeout: Duration::from_secs(120),
        })
    }

    pub fn translate(&self, record: &BenchmarkRecord, schema_text: &str, mode: Mode) -> Result<String, String> {
        match self {
            Translator::GoldOracle(map) => map
                .get(&record.question_id)
                .cloned()
                .ok_or_else(|| format!("no SQL for `{}`", record.question_id)),
            Translator::RemoteService { url, timeout } => {
                let agent = ureq::AgentBuilder::new().timeout(*timeout).build();
                let body = serde_json::json!({
                    "question": record.question,
                    "schema_text": schema_text,
                    "mode": mode.to_string(),
                });
                let resp: serde_json::Value = agent
                    .post(url)
                    .send_json(body)
                    .map_err(|e| e.to_string())?
                    .into_json()
                    .map_err(|e| e.to_string())?;
                resp.get("sql")
                    .and_then(|s| s.as_str())
                    .map(str::to_string)
                    .ok_or_else(|| "response has no `sql` field".to_string())
            }
        }
    }
}
