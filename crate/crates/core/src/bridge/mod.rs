//! The wrapper protocol between virtual tables and HTTP APIs: invocability
//! checks, per-binding calls, decoding, merging, and residual filtering.

mod http;

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde_json::{Map, Value as Json};
use thiserror::Error;

use crate::scalar::{self, GeoProvider, ScalarSignature};
use crate::schema::{ApiMapping, HttpMethod, VirtualTableDef};
use crate::sql::{conjunction_matches, Atom, AtomOp, DnfConstraint, Operand};
use crate::value::{parse_numeric, Dtype, ResultTable, Value};

type CallResult = Result<Vec<Vec<Value>>, BridgeError>;

pub use http::HttpClient;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BridgeError {
    #[error("Cannot invoke any of the REST API [{api}]: {}", .failures.join("; "))]
    AllCallsFailed { api: String, failures: Vec<String> },
    #[error("transport error calling {url}: {message}")]
    Transport { url: String, message: String },
    #[error("{url} answered HTTP {status}: {body}")]
    Status { url: String, status: u16, body: String },
    #[error("cannot decode response of {url}: {message}")]
    Decode { url: String, message: String },
    #[error("cannot invoke {api}: {message}")]
    Unbindable { api: String, message: String },
    #[error("unknown scalar API `{0}`")]
    UnknownFunction(String),
    #[error("upstream failure in `{function}`: {message}")]
    Upstream { function: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BridgeConfig {
    pub timeout: Duration,
    pub max_inflight: usize,
    pub retries: u32,
    pub backoff: Duration,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        BridgeConfig {
            timeout: Duration::from_secs(10),
            max_inflight: 8,
            retries: 2,
            backoff: Duration::from_millis(100),
        }
    }
}

impl BridgeConfig {
    /// Defaults overridden by `HQ_HTTP_TIMEOUT_MS` and `HQ_MAX_INFLIGHT`.
    pub fn from_env() -> Self {
        BridgeConfig::default().with_env_overrides()
    }

    /// Replaces fields whose environment variable is set and parses.
    pub fn with_env_overrides(self) -> Self {
        let mut c = self;
        if let Some(ms) = std::env::var("HQ_HTTP_TIMEOUT_MS")
            .ok()
            .and_then(|v| v.trim().parse::<u64>().ok())
        {
            c.timeout = Duration::from_millis(ms.max(1));
        }
        if let Some(n) = std::env::var("HQ_MAX_INFLIGHT")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
        {
            c.max_inflight = n.max(1);
        }
        c
    }
}

/// How the parameters of one invocation are bound.
#[derive(Debug, Clone, PartialEq)]
pub enum BindingSpec {
    Dnf(DnfConstraint),
    Tuples {
        columns: Vec<String>,
        tuples: Vec<Vec<Value>>,
    },
    Unbound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvocationRequest {
    pub mapping: ApiMapping,
    /// Columns of the resulting table, in order.
    pub columns: Vec<(String, Dtype)>,
    pub binding: BindingSpec,
}

impl InvocationRequest {
    pub fn for_table(vt: &VirtualTableDef, binding: BindingSpec) -> Self {
        InvocationRequest {
            mapping: vt.mapping.clone(),
            columns: vt.columns.clone(),
            binding,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvokeOutcome {
    pub table: ResultTable,
    /// Failed logical calls, when at least one other call succeeded.
    pub failures: Vec<BridgeError>,
    pub http_calls: usize,
}

/// Whether every required parameter of `mapping` is bound by an `=` or `IN`
/// atom of `conjunction`, with the candidate values per bound parameter.
pub fn can_invoke(mapping: &ApiMapping, conjunction: &[Atom]) -> (bool, BTreeMap<String, Vec<Value>>) {
    let mut bound: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    for a in conjunction {
        let Some(p) = mapping.parameter(&a.column.1) else {
            continue;
        };
        if bound.contains_key(&p.name) {
            continue;
        }
        let values = match (&a.op, &a.operand) {
            (AtomOp::Eq, Operand::Literal(v)) if !v.is_null() => vec![v.clone()],
            (AtomOp::In, Operand::List(vs)) => {
                let mut out: Vec<Value> = Vec::new();
                for v in vs.iter().filter(|v| !v.is_null()) {
                    if !out.iter().any(|o| o.key() == v.key()) {
                        out.push(v.clone());
                    }
                }
                out
            }
            _ => continue,
        };
        bound.insert(p.name.clone(), values);
    }
    let ok = mapping.required_parameters().all(|p| bound.contains_key(&p.name));
    (ok, bound)
}

/// One planned HTTP call.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CallSpec {
    pub params: Vec<(String, Value)>,
    pub dnf: Option<Json>,
}

impl CallSpec {
    fn cache_key(&self, mapping: &ApiMapping) -> String {
        let mut pairs: Vec<(String, String)> = self
            .params
            .iter()
            .map(|(k, v)| (k.to_ascii_lowercase(), v.key()))
            .collect();
        pairs.sort();
        format!("{:?} {} {:?}", mapping.method, mapping.url, pairs)
    }
}

enum Residual {
    Atoms(Vec<Atom>),
    Tuple(Vec<(String, Value)>),
    None,
}

struct Logical {
    call: Option<usize>,
    residual: Residual,
    unbindable: Option<String>,
}

fn cartesian(bound: &BTreeMap<String, Vec<Value>>) -> Vec<Vec<(String, Value)>> {
    let mut out: Vec<Vec<(String, Value)>> = vec![Vec::new()];
    for (name, values) in bound {
        let mut next = Vec::with_capacity(out.len() * values.len());
        for prefix in &out {
            for v in values {
                let mut p = prefix.clone();
                p.push((name.clone(), v.clone()));
                next.push(p);
            }
        }
        out = next;
    }
    out
}

fn decode_value(v: &Json, dtype: Dtype) -> Result<Value, String> {
    let bad = || format!("{v} is not a valid {dtype}");
    Ok(match (v, dtype) {
        (Json::Null, _) => Value::Null,
        (Json::Object(_) | Json::Array(_), _) => return Err(bad()),
        (Json::Bool(b), Dtype::Boolean) => Value::Boolean(*b),
        (Json::Bool(b), Dtype::Integer) => Value::Integer(*b as i64),
        (Json::Bool(b), Dtype::Real) => Value::Real(*b as i64 as f64),
        (Json::Bool(b), Dtype::Text) => Value::Text(if *b { "true" } else { "false" }.into()),
        (Json::Number(n), Dtype::Integer) => match (n.as_i64(), n.as_f64()) {
            (Some(i), _) => Value::Integer(i),
            (None, Some(f)) if f.fract() == 0.0 && f.abs() < 9.2e18 => Value::Integer(f as i64),
            _ => return Err(bad()),
        },
        (Json::Number(n), Dtype::Real) => Value::Real(n.as_f64().ok_or_else(bad)?),
        (Json::Number(n), Dtype::Boolean) => match n.as_f64() {
            Some(0.0) => Value::Boolean(false),
            Some(1.0) => Value::Boolean(true),
            _ => return Err(bad()),
        },
        (Json::Number(_), Dtype::Text) => Value::Text(Value::from_json(v).to_text().unwrap_or_default()),
        (Json::String(s), Dtype::Text) => Value::Text(s.clone()),
        (Json::String(s), Dtype::Boolean) => match s.trim().to_ascii_lowercase().as_str() {
            "true" | "t" | "1" => Value::Boolean(true),
            "false" | "f" | "0" => Value::Boolean(false),
            _ => return Err(bad()),
        },
        (Json::String(s), Dtype::Integer | Dtype::Real) => {
            let n = parse_numeric(s.trim()).ok_or_else(bad)?;
            decode_value(&n.to_json(), dtype)?
        }
    })
}

/// Decodes a response body into rows over `columns`. Columns outside
/// `output_keys` take the call's bound value, or null.
pub(crate) fn decode_rows(
    url: &str,
    body: &Json,
    mapping: &ApiMapping,
    columns: &[(String, Dtype)],
    params: &[(String, Value)],
) -> Result<Vec<Vec<Value>>, BridgeError> {
    let err = |m: String| BridgeError::Decode {
        url: url.to_string(),
        message: m,
    };
    let keys = &mapping.output_keys;
    let records: Vec<Vec<Json>> = match body {
        Json::Array(items) => items
            .iter()
            .map(|item| match item {
                Json::Object(o) => keys
                    .iter()
                    .map(|k| object_get(o, k).ok_or_else(|| format!("missing key `{k}`")))
                    .collect(),
                Json::Array(a) if a.len() == keys.len() => Ok(a.clone()),
                Json::Array(a) => Err(format!(
                    "positional row has {} values, expected {}",
                    a.len(),
                    keys.len()
                )),
                other => Err(format!("row {other} is neither an object nor an array")),
            })
            .collect::<Result<_, _>>()
            .map_err(err)?,
        Json::Object(o) => vec![keys
            .iter()
            .map(|k| object_get(o, k).ok_or_else(|| format!("missing key `{k}`")))
            .collect::<Result<_, _>>()
            .map_err(err)?],
        other => return Err(err(format!("expected an array or object, got {other}"))),
    };
    let mut rows = Vec::with_capacity(records.len());
    for rec in records {
        let mut row = Vec::with_capacity(columns.len());
        for (name, dtype) in columns {
            let v = match keys.iter().position(|k| k.eq_ignore_ascii_case(name)) {
                Some(i) => decode_value(&rec[i], *dtype).map_err(|m| err(format!("column `{name}`: {m}")))?,
                None => params
                    .iter()
                    .find(|(p, _)| p.eq_ignore_ascii_case(name))
                    .map(|(_, v)| v.with_affinity(*dtype))
                    .unwrap_or(Value::Null),
            };
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn object_get(o: &Map<String, Json>, key: &str) -> Option<Json> {
    o.get(key)
        .or_else(|| o.iter().find(|(k, _)| k.eq_ignore_ascii_case(key)).map(|(_, v)| v))
        .cloned()
}

/// Invokes HTTP APIs on behalf of virtual tables and scalar functions.
pub struct Bridge {
    client: HttpClient,
    config: BridgeConfig,
}

impl Default for Bridge {
    fn default() -> Self {
        Bridge::new(BridgeConfig::from_env())
    }
}

impl Bridge {
    pub fn new(config: BridgeConfig) -> Self {
        Bridge {
            client: HttpClient::new(&config),
            config,
        }
    }

    pub fn config(&self) -> &BridgeConfig {
        &self.config
    }

    pub fn client(&self) -> &HttpClient {
        &self.client
    }

    pub fn invoke(&self, req: &InvocationRequest) -> Result<ResultTable, BridgeError> {
        self.invoke_detailed(req).map(|o| o.table)
    }

    pub fn invoke_detailed(&self, req: &InvocationRequest) -> Result<InvokeOutcome, BridgeError> {
        let mapping = &req.mapping;
        let mut calls: Vec<CallSpec> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut logical: Vec<Logical> = Vec::new();
        let mut add_call = |spec: CallSpec, calls: &mut Vec<CallSpec>| -> usize {
            let key = spec.cache_key(mapping);
            *index.entry(key).or_insert_with(|| {
                calls.push(spec);
                calls.len() - 1
            })
        };
        match &req.binding {
            BindingSpec::Dnf(dnf) => {
                let dnf_json = dnf.to_json();
                for disjunct in &dnf.disjuncts {
                    let (ok, bound) = can_invoke(mapping, disjunct);
                    if !ok {
                        let missing: Vec<&str> = mapping
                            .required_parameters()
                            .filter(|p| !bound.contains_key(&p.name))
                            .map(|p| p.name.as_str())
                            .collect();
                        logical.push(Logical {
                            call: None,
                            residual: Residual::None,
                            unbindable: Some(format!("required parameter(s) {} unbound", missing.join(", "))),
                        });
                        continue;
                    }
                    for params in cartesian(&bound) {
                        let call = add_call(
                            CallSpec {
                                params,
                                dnf: Some(dnf_json.clone()),
                            },
                            &mut calls,
                        );
                        logical.push(Logical {
                            call: Some(call),
                            residual: Residual::Atoms(disjunct.clone()),
                            unbindable: None,
                        });
                    }
                }
            }
            BindingSpec::Tuples { columns, tuples } => {
                let mut seen = std::collections::HashSet::new();
                for t in tuples {
                    if t.len() != columns.len() {
                        return Err(BridgeError::Unbindable {
                            api: mapping.entity.clone(),
                            message: format!("tuple arity {} does not match {} column(s)", t.len(), columns.len()),
                        });
                    }
                    if t.iter().any(Value::is_null) {
                        continue;
                    }
                    let key: Vec<String> = t.iter().map(Value::key).collect();
                    if !seen.insert(key) {
                        continue;
                    }
                    let params: Vec<(String, Value)> = columns
                        .iter()
                        .zip(t)
                        .map(|(c, v)| {
                            let name = mapping
                                .parameter(c)
                                .map(|p| p.name.clone())
                                .unwrap_or_else(|| c.clone());
                            (name, v.clone())
                        })
                        .collect();
                    let call = add_call(
                        CallSpec {
                            params: params.clone(),
                            dnf: None,
                        },
                        &mut calls,
                    );
                    logical.push(Logical {
                        call: Some(call),
                        residual: Residual::Tuple(params),
                        unbindable: None,
                    });
                }
            }
            BindingSpec::Unbound => {
                let (ok, _) = can_invoke(mapping, &[]);
                if !ok {
                    return Err(BridgeError::AllCallsFailed {
                        api: mapping.entity.clone(),
                        failures: vec!["required parameters are unbound".into()],
                    });
                }
                let call = add_call(
                    CallSpec {
                        params: Vec::new(),
                        dnf: None,
                    },
                    &mut calls,
                );
                logical.push(Logical {
                    call: Some(call),
                    residual: Residual::None,
                    unbindable: None,
                });
            }
        }

        let results = self.run_calls(mapping, &req.columns, &calls);

        let mut table = ResultTable::new(req.columns.clone());
        let mut failures: Vec<BridgeError> = Vec::new();
        let mut emitted: HashMap<Vec<String>, usize> = HashMap::new();
        let mut succeeded = 0usize;
        for l in &logical {
            let rows = match (l.call, &l.unbindable) {
                (_, Some(m)) => {
                    failures.push(BridgeError::Unbindable {
                        api: mapping.entity.clone(),
                        message: m.clone(),
                    });
                    continue;
                }
                (Some(i), None) => match &results[i] {
                    Ok(rows) => rows,
                    Err(e) => {
                        failures.push(e.clone());
                        continue;
                    }
                },
                (None, None) => continue,
            };
            succeeded += 1;
            let mut local: HashMap<Vec<String>, usize> = HashMap::new();
            for row in rows {
                if !residual_passes(&l.residual, &req.columns, row) {
                    continue;
                }
                let key: Vec<String> = row.iter().map(Value::key).collect();
                let c = local.entry(key.clone()).or_insert(0);
                *c += 1;
                let e = emitted.entry(key).or_insert(0);
                if *c > *e {
                    *e += 1;
                    table.push_row(row.clone());
                }
            }
        }
        if !logical.is_empty() && succeeded == 0 {
            return Err(BridgeError::AllCallsFailed {
                api: mapping.entity.clone(),
                failures: failures.iter().map(|f| f.to_string()).collect(),
            });
        }
        if !failures.is_empty() {
            log::warn!(
                "It failed in all of the urls for {} of {} call(s) to {}",
                failures.len(),
                logical.len(),
                mapping.entity
            );
        }
        Ok(InvokeOutcome {
            table,
            failures,
            http_calls: calls.len(),
        })
    }

    fn run_calls(&self, mapping: &ApiMapping, columns: &[(String, Dtype)], calls: &[CallSpec]) -> Vec<CallResult> {
        let slots: Vec<Mutex<Option<CallResult>>> = calls.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.config.max_inflight.max(1).min(calls.len());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= calls.len() {
                        break;
                    }
                    let r = self.one_call(mapping, columns, &calls[i]);
                    *slots[i].lock().unwrap_or_else(|p| p.into_inner()) = Some(r);
                });
            }
        });
        slots
            .into_iter()
            .map(|m| {
                m.into_inner()
                    .unwrap_or_else(|p| p.into_inner())
                    .expect("every call slot is filled")
            })
            .collect()
    }

    fn one_call(
        &self,
        mapping: &ApiMapping,
        columns: &[(String, Dtype)],
        call: &CallSpec,
    ) -> Result<Vec<Vec<Value>>, BridgeError> {
        let body = match mapping.method {
            HttpMethod::Get => None,
            HttpMethod::Post => {
                let mut obj = Map::new();
                for (k, v) in &call.params {
                    obj.insert(k.clone(), v.to_json());
                }
                if let Some(d) = &call.dnf {
                    if !obj.contains_key("dnf") {
                        obj.insert("dnf".into(), d.clone());
                    }
                }
                Some(Json::Object(obj))
            }
        };
        let json = self
            .client
            .request(mapping.method, &mapping.url, &call.params, body.as_ref())?;
        decode_rows(&mapping.url, &json, mapping, columns, &call.params)
    }
}

fn residual_passes(residual: &Residual, columns: &[(String, Dtype)], row: &[Value]) -> bool {
    let lookup = |name: &str| -> Option<Value> {
        columns
            .iter()
            .position(|(c, _)| c.eq_ignore_ascii_case(name))
            .map(|i| row[i].clone())
    };
    match residual {
        Residual::None => true,
        Residual::Atoms(atoms) => {
            let coerced: Vec<Atom> = atoms
                .iter()
                .map(|a| {
                    let dtype = columns
                        .iter()
                        .find(|(c, _)| c.eq_ignore_ascii_case(&a.column.1))
                        .map(|(_, d)| *d);
                    match (dtype, &a.operand) {
                        (Some(d), Operand::Literal(v)) => Atom {
                            operand: Operand::Literal(v.with_affinity(d)),
                            ..a.clone()
                        },
                        (Some(d), Operand::List(vs)) => Atom {
                            operand: Operand::List(vs.iter().map(|v| v.with_affinity(d)).collect()),
                            ..a.clone()
                        },
                        _ => a.clone(),
                    }
                })
                .collect();
            conjunction_matches(&coerced, &lookup)
        }
        Residual::Tuple(pairs) => {
            pairs.iter().all(
                |(name, v)| match columns.iter().find(|(c, _)| c.eq_ignore_ascii_case(name)) {
                    Some((_, d)) => lookup(name)
                        .and_then(|x| x.with_affinity(*d).sql_eq(&v.with_affinity(*d)))
                        .unwrap_or(false),
                    None => true,
                },
            )
        }
    }
}

/// Where a scalar function is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarTarget {
    Local,
    Remote(String),
}

/// Name-indexed scalar functions with their dispatch target.
#[derive(Clone)]
pub struct ScalarRegistry {
    entries: Vec<(ScalarSignature, ScalarTarget)>,
    geo: Arc<dyn GeoProvider>,
    client: Arc<HttpClient>,
}

impl ScalarRegistry {
    /// Every bundled API evaluated in-process.
    pub fn local() -> Self {
        Self::with_target(|_| ScalarTarget::Local)
    }

    /// Every bundled API served by a scalar server at `base_url`.
    pub fn remote(base_url: &str) -> Self {
        let base = base_url.trim_end_matches('/').to_string();
        Self::with_target(move |s| ScalarTarget::Remote(format!("{base}/{}", s.name)))
    }

    fn with_target(f: impl Fn(&ScalarSignature) -> ScalarTarget) -> Self {
        ScalarRegistry {
            entries: scalar::signatures()
                .into_iter()
                .map(|s| {
                    let t = f(&s);
                    (s, t)
                })
                .collect(),
            geo: Arc::from(scalar::default_provider()),
            client: Arc::new(HttpClient::new(&BridgeConfig::from_env())),
        }
    }

    pub fn with_geo(mut self, geo: Arc<dyn GeoProvider>) -> Self {
        self.geo = geo;
        self
    }

    pub fn signatures(&self) -> Vec<ScalarSignature> {
        self.entries.iter().map(|(s, _)| s.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&(ScalarSignature, ScalarTarget)> {
        self.entries.iter().find(|(s, _)| s.name.eq_ignore_ascii_case(name))
    }

    /// Evaluates one scalar call. Null arguments give null without a call;
    /// unknown places give null.
    pub fn invoke_scalar(&self, name: &str, args: &[Value]) -> Result<Value, BridgeError> {
        let (sig, target) = self
            .get(name)
            .ok_or_else(|| BridgeError::UnknownFunction(name.to_string()))?;
        if args.len() != sig.params.len() {
            return Err(BridgeError::Upstream {
                function: sig.name.clone(),
                message: format!("expects {} argument(s), got {}", sig.params.len(), args.len()),
            });
        }
        if args.iter().any(Value::is_null) {
            return Ok(Value::Null);
        }
        match target {
            ScalarTarget::Local => {
                scalar::call_sql(&sig.name, args, self.geo.as_ref()).map_err(|e| BridgeError::Upstream {
                    function: sig.name.clone(),
                    message: e.to_string(),
                })
            }
            ScalarTarget::Remote(url) => {
                let mut obj = Map::new();
                for (p, a) in sig.params.iter().zip(args) {
                    obj.insert(p.name.clone(), a.to_json());
                }
                let resp = self
                    .client
                    .request(HttpMethod::Post, url, &[], Some(&Json::Object(obj)));
                let body = match resp {
                    Ok(b) => b,
                    Err(BridgeError::Status { status: 404, body, .. }) if body.contains("place not found") => {
                        return Ok(Value::Null)
                    }
                    Err(e) => {
                        return Err(BridgeError::Upstream {
                            function: sig.name.clone(),
                            message: e.to_string(),
                        })
                    }
                };
                let obj = match &body {
                    Json::Array(items) => items.first().cloned().unwrap_or(Json::Null),
                    other => other.clone(),
                };
                let raw = obj
                    .as_object()
                    .and_then(|o| object_get(o, &sig.output.0))
                    .ok_or_else(|| BridgeError::Decode {
                        url: url.clone(),
                        message: format!("missing key `{}`", sig.output.0),
                    })?;
                decode_value(&raw, sig.output.1).map_err(|message| BridgeError::Decode {
                    url: url.clone(),
                    message,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{ApiParamDef, ParamLocation};

    fn mapping(required: &[&str], optional: &[&str]) -> ApiMapping {
        let p = |n: &&str, r| ApiParamDef {
            name: n.to_string(),
            required: r,
            dtype: Dtype::Integer,
            location: ParamLocation::Query,
        };
        ApiMapping {
            entity: "t".into(),
            url: "http://127.0.0.1:9/t".into(),
            method: HttpMethod::Post,
            parameters: required
                .iter()
                .map(|n| p(n, true))
                .chain(optional.iter().map(|n| p(n, false)))
                .collect(),
            output_keys: vec!["p".into(), "q".into()],
        }
    }

    #[test]
    fn can_invoke_cases() {
        let (ok, m) = can_invoke(&mapping(&[], &["number"]), &[]);
        assert!(ok && m.is_empty());
        let (ok, _) = can_invoke(&mapping(&["q"], &["p"]), &[Atom::eq("t", "p", Value::Integer(3))]);
        assert!(!ok);
        let (ok, m) = can_invoke(
            &mapping(&["number"], &[]),
            &[Atom {
                column: ("t".into(), "number".into()),
                op: AtomOp::In,
                operand: Operand::List(vec![Value::Integer(2), Value::Integer(3)]),
            }],
        );
        assert!(ok);
        assert_eq!(m["number"], vec![Value::Integer(2), Value::Integer(3)]);
    }

    #[test]
    fn cartesian_expansion() {
        let mut b = BTreeMap::new();
        b.insert("a".to_string(), vec![Value::Integer(1), Value::Integer(2)]);
        b.insert(
            "b".to_string(),
            vec![Value::Integer(3), Value::Integer(4), Value::Integer(5)],
        );
        assert_eq!(cartesian(&b).len(), 6);
        assert_eq!(cartesian(&BTreeMap::new()), vec![Vec::new()]);
    }

    #[test]
    fn decode_shapes_and_errors() {
        let m = mapping(&[], &["p", "q"]);
        let cols = vec![
            ("p".to_string(), Dtype::Integer),
            ("q".to_string(), Dtype::Integer),
            ("r".to_string(), Dtype::Text),
        ];
        let rows = decode_rows(
            "u",
            &serde_json::json!([{"p": 1, "Q": "2"}, [3, 4.0]]),
            &m,
            &cols,
            &[("r".into(), Value::Text("x".into()))],
        )
        .unwrap();
        assert_eq!(
            rows[0],
            vec![Value::Integer(1), Value::Integer(2), Value::Text("x".into())]
        );
        assert_eq!(
            rows[1],
            vec![Value::Integer(3), Value::Integer(4), Value::Text("x".into())]
        );
        assert!(decode_rows("u", &serde_json::json!({"p": 1, "q": 2}), &m, &cols, &[]).is_ok());
        assert!(matches!(
            decode_rows("u", &serde_json::json!([{"p": 1.5, "q": 2}]), &m, &cols, &[]),
            Err(BridgeError::Decode { .. })
        ));
        assert!(matches!(
            decode_rows("u", &serde_json::json!([{"p": 1}]), &m, &cols, &[]),
            Err(BridgeError::Decode { .. })
        ));
        assert!(matches!(
            decode_rows("u", &serde_json::json!("x"), &m, &cols, &[]),
            Err(BridgeError::Decode { .. })
        ));
    }

    #[test]
    fn refused_connection_is_all_calls_failed() {
        let bridge = Bridge::new(BridgeConfig {
            timeout: Duration::from_millis(500),
            retries: 0,
            ..BridgeConfig::default()
        });
        let req = InvocationRequest {
            mapping: mapping(&[], &["p"]),
            columns: vec![("p".into(), Dtype::Integer), ("q".into(), Dtype::Integer)],
            binding: BindingSpec::Unbound,
        };
        let err = bridge.invoke(&req).unwrap_err();
        assert!(err.to_string().contains("Cannot invoke any of the REST API"), "{err}");
    }

    #[test]
    fn empty_tuple_set_makes_no_calls() {
        let bridge = Bridge::new(BridgeConfig::default());
        let req = InvocationRequest {
            mapping: mapping(&["p"], &[]),
            columns: vec![("p".into(), Dtype::Integer), ("q".into(), Dtype::Integer)],
            binding: BindingSpec::Tuples {
                columns: vec!["p".into()],
                tuples: vec![vec![Value::Null]],
            },
        };
        let out = bridge.invoke_detailed(&req).unwrap();
        assert_eq!(out.http_calls, 0);
        assert!(out.table.rows.is_empty());
    }

    #[test]
    fn local_scalars() {
        let r = ScalarRegistry::local();
        assert_eq!(
            r.invoke_scalar("count_syllables", &[Value::Text("Roman Bragin".into())])
                .unwrap(),
            Value::Integer(4)
        );
        assert_eq!(
            r.invoke_scalar("is_fibonacci", &[Value::Integer(4)]).unwrap(),
            Value::Boolean(false)
        );
        assert_eq!(r.invoke_scalar("is_prime", &[Value::Null]).unwrap(), Value::Null);
        assert!(matches!(
            r.invoke_scalar("frob", &[]),
            Err(BridgeError::UnknownFunction(_))
        ));
    }
}
