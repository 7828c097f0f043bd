use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use super::{run_benchmark, BenchReport, BenchmarkRecord, DbEnv, EvalEnv, Mode, Translator, TranslatorSpec};
use crate::bridge::{Bridge, BridgeConfig, ScalarRegistry};
use crate::data::DatabaseData;
use crate::executor::{Database, ExecError};
use crate::http_server::ServerHandle;
use crate::schema::{abstract_from_tables, derive_relational_view};
use crate::tablegen::{
    apply_manifest, endpoint_for, select_replacements, serve_tables, ReplacementManifest, TablegenError,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub fraction: f64,
    pub accuracy: Option<f64>,
    pub matched: usize,
    pub n: usize,
    pub manifests: Vec<ReplacementManifest>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub reports: Vec<BenchReport>,
}

impl SweepResult {
    /// `fraction,accuracy` rows; byte-identical for identical inputs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fraction,accuracy,matched,n\n");
        for p in &self.points {
            let acc = p.accuracy.map(|a| format!("{a:.6}")).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{}", p.fraction, acc, p.matched, p.n);
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "points": self.points })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error(transparent)]
    Tablegen(#[from] TablegenError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Schema(#[from] crate::schema::SchemaError),
}

/// Builds the environment for one fraction. Each database gets its own
/// table-API server; the returned handles keep them alive.
pub fn replaced_env(
    databases: &[DatabaseData],
    fraction: f64,
    seed: u64,
    bridge_config: &BridgeConfig,
) -> Result<(EvalEnv, Vec<ReplacementManifest>, Vec<ServerHandle>), SweepError> {
    let mut env = EvalEnv::new(Bridge::new(bridge_config.clone()), ScalarRegistry::local());
    let mut manifests = Vec::new();
    let mut servers = Vec::new();
    for data in databases {
        let manifest = select_replacements(&data.id, &data.table_names(), fraction, seed)?;
        let endpoints = data
            .tables
            .iter()
            .filter(|t| manifest.is_replaced(&t.ddl.name))
            .map(endpoint_for)
            .collect::<Result<Vec<_>, _>>()?;
        let ddls: Vec<_> = data.tables.iter().map(|t| t.ddl.clone()).collect();
        let schema = abstract_from_tables(&ddls)?;
        let (schema, mappings, server) = if endpoints.is_empty() {
            (schema, Vec::new(), None)
        } else {
            let server = serve_tables(endpoints, "127.0.0.1:0", 4)?;
            let (s, m) = apply_manifest(&schema, &manifest, &server.url())?;
            (s, m, Some(server))
        };
        let view = derive_relational_view(&schema, &mappings)?;
        let db = Database::from_data(data, &manifest.replaced_tables)?;
        env.add(
            &data.id,
            DbEnv {
                db: Arc::new(db),
                schema_text: view.ddl_text.clone(),
                view,
            },
        );
        servers.extend(server);
        manifests.push(manifest);
    }
    Ok((env, manifests, servers))
}

/// Accuracy per replacement fraction, in declarative mode.
pub fn sweep_replacement(
    records: &[BenchmarkRecord],
    fractions: &[f64],
    seed: u64,
    translator: &Translator,
    databases: &[DatabaseData],
    bridge_config: &BridgeConfig,
) -> Result<SweepResult, SweepError> {
    if let Some(&bad) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(TablegenError::InvalidFraction(bad).into());
    }
    let spec = TranslatorSpec {
        translator: translator.clone(),
        mode: Mode::Declarative,
    };
    let mut points = Vec::with_capacity(fractions.len());
    let mut reports = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        let (env, manifests, servers) = replaced_env(databases, fraction, seed, bridge_config)?;
        let report = run_benchmark(records, &spec, &env);
        for s in &servers {
            s.shutdown();
        }
        log::info!(
            "fraction {fraction}: {}/{} matched",
            report.summary.matched,
            report.summary.n
        );
        points.push(SweepPoint {
            fraction,
            accuracy: report.summary.accuracy,
            matched: report.summary.matched,
            n: report.summary.n,
            manifests,
        });
        reports.push(report);
    }
    Ok(SweepResult { points, reports })
}
