//! The `hybridq` command line.
//!
//! Exit status is 0 on success, 1 when some items failed (a mismatch, a
//! failed question), and 2 on usage or setup errors.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::bridge::{Bridge, BridgeConfig, ScalarRegistry};
use crate::data::{load_database_dir, DatabaseData};
use crate::eval::{
    load_records, rows_match, run_benchmark, sweep_replacement, BenchmarkRecord, DbEnv, EvalEnv, Mode, Translator,
    TranslatorSpec,
};
use crate::executor::Database;
use crate::http_server::ServerHandle;
use crate::scalar::{attach_scalar_apis, serve_scalars, Gazetteer, GeoProvider, RemoteGeo};
use crate::schema::{
    derive_relational_view, extract_abstract_from_ddl, load_abstract_schema, load_api_mappings, RelationalView,
};
use crate::sql::plan_query;
use crate::tablegen::{
    apply_manifest, emit_openapi, endpoint_for, mapping_from_openapi, select_replacements, serve_tables,
    ReplacementManifest,
};
use crate::value::ResultTable;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ITEM_FAILURES: i32 = 1;
pub const EXIT_FATAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hybridq", version, about = "SQL over relational tables and HTTP APIs")]
pub struct Cli {
    /// Log progress at info level (RUST_LOG takes precedence).
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Schema tooling.
    Schema {
        #[command(subcommand)]
        command: SchemaCommand,
    },
    /// Serve database tables as HTTP APIs.
    Serve(ServeArgs),
    /// Serve the bundled scalar APIs.
    ServeScalars(ServeScalarsArgs),
    /// Print the materialization plan of a query.
    Rewrite(RewriteArgs),
    /// Run one query or question against a database.
    Run(RunArgs),
    /// Run a benchmark file and write a report.
    Bench(BenchArgs),
    /// Benchmark accuracy across table replacement fractions.
    Sweep(SweepArgs),
    /// Compare two result files.
    Eval(EvalArgs),
}

#[derive(Debug, Subcommand)]
pub enum SchemaCommand {
    /// Derive the relational view and its DDL text.
    Compile(CompileArgs),
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    /// CREATE TABLE statements.
    #[arg(
        long,
        conflicts_with = "abstract_schema",
        required_unless_present = "abstract_schema"
    )]
    pub ddl: Option<PathBuf>,
    /// Abstract schema JSON.
    #[arg(long = "abstract")]
    pub abstract_schema: Option<PathBuf>,
    /// API mapping JSON (a list of mappings).
    #[arg(long)]
    pub mappings: Option<PathBuf>,
    /// OpenAPI documents of table APIs; each adds a mapping rooted at --base-url.
    #[arg(long, requires = "base_url")]
    pub openapi: Vec<PathBuf>,
    #[arg(long)]
    pub base_url: Option<String>,
    /// Attach every scalar API, served at this base URL.
    #[arg(long)]
    pub scalar_apis: Option<String>,
    /// View JSON destination (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// DDL text destination.
    #[arg(long)]
    pub ddl_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NetArgs {
    /// Per-request HTTP timeout (HQ_HTTP_TIMEOUT_MS overrides).
    #[arg(long)]
    pub http_timeout_ms: Option<u64>,
    /// Concurrent API requests (HQ_MAX_INFLIGHT overrides).
    #[arg(long)]
    pub max_inflight: Option<usize>,
}

impl NetArgs {
    fn bridge_config(&self) -> BridgeConfig {
        let mut c = BridgeConfig::default();
        if let Some(ms) = self.http_timeout_ms {
            c.timeout = std::time::Duration::from_millis(ms);
        }
        if let Some(n) = self.max_inflight {
            c.max_inflight = n.max(1);
        }
        c.with_env_overrides()
    }
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Database directory (schema.sql plus one CSV per table).
    #[arg(long)]
    pub data: PathBuf,
    /// Replacement manifest JSON; overrides --fraction.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Directory receiving one OpenAPI document per served table.
    #[arg(long)]
    pub openapi_dir: Option<PathBuf>,
    /// Destination of the API mapping JSON for the served tables.
    #[arg(long)]
    pub mappings_out: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct ServeScalarsArgs {
    #[arg(long, default_value_t = 8081)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Remote geo service (HQ_GEO_PROVIDER overrides).
    #[arg(long)]
    pub geo_provider: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct RewriteArgs {
    #[arg(long)]
    pub sql: String,
    /// Relational view JSON as written by `schema compile`.
    #[arg(long)]
    pub view: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScalarArgs {
    /// Scalar API server; one is hosted in-process when absent.
    #[arg(long)]
    pub scalar_url: Option<String>,
    /// Remote geo service (HQ_GEO_PROVIDER overrides).
    #[arg(long)]
    pub geo_provider: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Database directory.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, conflicts_with = "question", required_unless_present = "question")]
    pub sql: Option<String>,
    /// Natural-language question sent to the translator.
    #[arg(long)]
    pub question: Option<String>,
    #[arg(long, default_value = "declarative")]
    pub mode: Mode,
    /// View JSON for declarative mode; defaults to the tables plus scalar APIs.
    #[arg(long)]
    pub view: Option<PathBuf>,
    /// Translator service (HQ_TRANSLATOR_URL overrides).
    #[arg(long)]
    pub translator_url: Option<String>,
    #[command(flatten)]
    pub scalar: ScalarArgs,
    #[command(flatten)]
    pub net: NetArgs,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Benchmark records, JSON Lines.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Directory holding one database directory per db_id.
    #[arg(long)]
    pub data_root: PathBuf,
    /// JSON object mapping question ids to SQL; defaults to each record's gold_sql.
    #[arg(long, conflicts_with = "translator_url")]
    pub gold_oracle: Option<PathBuf>,
    /// Translator service (HQ_TRANSLATOR_URL overrides).
    #[arg(long)]
    pub translator_url: Option<String>,
    /// Report JSON destination.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[arg(long, default_value = "declarative")]
    pub mode: Mode,
    /// Expose the scalar APIs as virtual tables in declarative mode.
    #[arg(long)]
    pub scalar_apis: bool,
    #[command(flatten)]
    pub scalar: ScalarArgs,
    #[command(flatten)]
    pub net: NetArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.25, 0.5, 0.75, 1.0])]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination (stdout when absent).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub net: NetArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Result JSON `{columns, rows}`.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// Compare row order as well.
    #[arg(long)]
    pub ordered: bool,
}

/// A fatal error: reported on stderr, exit status 2.
#[derive(Debug)]
pub struct Fatal(pub String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

type CliResult = Result<i32, Fatal>;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FATAL } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose);
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Fatal(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FATAL
        }
    }
}

fn init_logging(verbose: bool) {
    let level = if verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn dispatch(command: Command) -> CliResult {
    match command {
        Command::Schema {
            command: SchemaCommand::Compile(a),
        } => schema_compile(a),
        Command::Serve(a) => serve(a),
        Command::ServeScalars(a) => serve_scalar_apis(a),
        Command::Rewrite(a) => rewrite(a),
        Command::Run(a) => run_one(a),
        Command::Bench(a) => bench(a),
        Command::Sweep(a) => sweep(a),
        Command::Eval(a) => eval(a),
    }
}

fn read(path: &Path) -> Result<String, Fatal> {
    std::fs::read_to_string(path).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Fatal> {
    std::fs::write(path, text).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Fatal> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize") + "\n"
}

fn env_override(var: &str, flag: Option<&String>) -> Option<String> {
    std::env::var(var)
        .ok()
        .filter(|v| !v.trim().is_empty())
        .or_else(|| flag.cloned())
}

fn geo_provider(flag: Option<&String>) -> Box<dyn GeoProvider> {
    match env_override("HQ_GEO_PROVIDER", flag) {
        Some(url) => Box::new(RemoteGeo::new(url.trim())),
        None => Box::new(Gazetteer::bundled().clone()),
    }
}

/// Blocks until SIGINT or SIGTERM.
fn wait_for_shutdown() -> Result<(), Fatal> {
    let (tx, rx) = mpsc::channel();
    ctrlc::set_handler(move || {
        let _ = tx.send(());
    })?;
    let _ = rx.recv();
    Ok(())
}

fn schema_compile(a: CompileArgs) -> CliResult {
    let mut schema = match (&a.ddl, &a.abstract_schema) {
        (Some(p), _) => extract_abstract_from_ddl(&read(p)?)?,
        (None, Some(p)) => load_abstract_schema(&read(p)?)?,
        (None, None) => unreachable!("clap requires one of --ddl and --abstract"),
    };
    let mut mappings = match &a.mappings {
        Some(p) => load_api_mappings(&read(p)?, &schema)?,
        None => Vec::new(),
    };
    if let Some(base) = &a.base_url {
        for p in &a.openapi {
            let m = mapping_from_openapi(&read(p)?, base)?;
            let e = schema
                .entity_mut(&m.entity)
                .ok_or_else(|| Fatal(format!("{}: no entity named `{}`", p.display(), m.entity)))?;
            e.kind = crate::schema::EntityKind::Api;
            for attr in &mut e.attributes {
                attr.direction = crate::schema::Direction::Input;
            }
            mappings.push(m);
        }
    }
    if let Some(url) = &a.scalar_apis {
        mappings.extend(attach_scalar_apis(&mut schema, url));
    }
    let view = derive_relational_view(&schema, &mappings)?;
    if let Some(p) = &a.ddl_out {
        write(p, &view.ddl_text)?;
    }
    emit(a.out.as_deref(), &pretty(&serde_json::to_value(&view)?))?;
    Ok(EXIT_OK)
}

fn serve(a: ServeArgs) -> CliResult {
    let data = load_database_dir(&a.data)?;
    let manifest: ReplacementManifest = match &a.manifest {
        Some(p) => serde_json::from_str(&read(p)?)?,
        None => select_replacements(&data.id, &data.table_names(), a.fraction, a.seed)?,
    };
    let endpoints = data
        .tables
        .iter()
        .filter(|t| manifest.is_replaced(&t.ddl.name))
        .map(endpoint_for)
        .collect::<Result<Vec<_>, _>>()?;
    if endpoints.is_empty() {
        return Err(Fatal("the manifest replaces no tables".into()));
    }
    if let Some(dir) = &a.openapi_dir {
        std::fs::create_dir_all(dir).map_err(|e| Fatal(format!("{}: {e}", dir.display())))?;
        for e in &endpoints {
            write(&dir.join(format!("{}.yaml", e.table)), &emit_openapi(e, &data.id))?;
        }
    }
    let server = serve_tables(endpoints, &format!("{}:{}", a.host, a.port), a.workers)?;
    if let Some(p) = &a.mappings_out {
        let ddls: Vec<_> = data.tables.iter().map(|t| t.ddl.clone()).collect();
        let schema = crate::schema::abstract_from_tables(&ddls)?;
        let (_, mappings) = apply_manifest(&schema, &manifest, &server.url())?;
        write(p, &pretty(&serde_json::to_value(&mappings)?))?;
    }
    println!("{}", serde_json::json!({ "url": server.url(), "manifest": manifest }));
    wait_for_shutdown()?;
    server.shutdown();
    Ok(EXIT_OK)
}

fn serve_scalar_apis(a: ServeScalarsArgs) -> CliResult {
    let server = serve_scalars(
        &format!("{}:{}", a.host, a.port),
        geo_provider(a.geo_provider.as_ref()),
        a.workers,
    )?;
    println!("{}", serde_json::json!({ "url": server.url() }));
    wait_for_shutdown()?;
    server.shutdown();
    Ok(EXIT_OK)
}

fn rewrite(a: RewriteArgs) -> CliResult {
    let view: RelationalView = serde_json::from_str(&read(&a.view)?)?;
    let plan = plan_query(&a.sql, &view)?;
    print!("{}", pretty(&plan.to_json()));
    Ok(EXIT_OK)
}

/// The scalar server URL, hosting one locally when none is given.
fn scalar_server(a: &ScalarArgs) -> Result<(String, Option<ServerHandle>), Fatal> {
    match &a.scalar_url {
        Some(url) => Ok((url.trim_end_matches('/').to_string(), None)),
        None => {
            let s = serve_scalars("127.0.0.1:0", geo_provider(a.geo_provider.as_ref()), 4)?;
            Ok((s.url(), Some(s)))
        }
    }
}

fn scalar_registry(a: &ScalarArgs) -> ScalarRegistry {
    let reg = match &a.scalar_url {
        Some(url) => ScalarRegistry::remote(url),
        None => ScalarRegistry::local(),
    };
    reg.with_geo(Arc::from(geo_provider(a.geo_provider.as_ref())))
}

fn translator_for(
    gold_oracle: Option<&PathBuf>,
    url: Option<&String>,
    records: &[BenchmarkRecord],
) -> Result<Translator, Fatal> {
    if let Some(url) = env_override("HQ_TRANSLATOR_URL", url) {
        return Ok(Translator::remote(&url)?);
    }
    match gold_oracle {
        Some(p) => Ok(Translator::from_file(p)?),
        None => Ok(Translator::from_records(records)),
    }
}

fn run_one(a: RunArgs) -> CliResult {
    let data = load_database_dir(&a.data)?;
    let bridge = Bridge::new(a.net.bridge_config());
    let (scalar_url, _server) = if a.mode == Mode::Declarative && a.view.is_none() {
        let (u, s) = scalar_server(&a.scalar)?;
        (u, s)
    } else {
        (String::new(), None)
    };
    let env = match &a.view {
        Some(p) => {
            let view: RelationalView = serde_json::from_str(&read(p)?)?;
            let db = Database::from_data(&data, &[])?;
            DbEnv {
                db: Arc::new(db),
                schema_text: view.ddl_text.clone(),
                view,
            }
        }
        None if a.mode == Mode::Declarative => DbEnv::with_scalar_apis(&data, &scalar_url)?,
        None => DbEnv::with_scalar_apis(&data, "http://127.0.0.1:9")?,
    };
    let sql = match (&a.sql, &a.question) {
        (Some(s), _) => s.clone(),
        (None, Some(q)) => {
            let record = BenchmarkRecord {
                question_id: format!("{}.0", data.id),
                db_id: data.id.clone(),
                question: q.clone(),
                gold_sql: None,
                gold_columns: None,
                gold_rows: Vec::new(),
                produces_rows: false,
            };
            let url = env_override("HQ_TRANSLATOR_URL", a.translator_url.as_ref())
                .ok_or_else(|| Fatal("--question needs --translator-url or HQ_TRANSLATOR_URL".into()))?;
            let sql = Translator::remote(&url)?.translate(&record, &env.schema_text, a.mode)?;
            eprintln!("{sql}");
            sql
        }
        (None, None) => unreachable!("clap requires one of --sql and --question"),
    };
    let mut eval_env = EvalEnv::new(bridge, scalar_registry(&a.scalar));
    eval_env.add(&data.id, env);
    let table = eval_env.execute(&data.id, &sql, a.mode)?;
    print!("{}", pretty(&table.to_json()));
    Ok(EXIT_OK)
}

fn load_databases(root: &Path, records: &[BenchmarkRecord]) -> Result<Vec<DatabaseData>, Fatal> {
    let ids: BTreeSet<&str> = records.iter().map(|r| r.db_id.as_str()).collect();
    ids.into_iter()
        .map(|id| load_database_dir(&root.join(id)).map_err(Fatal::from))
        .collect()
}

fn report_exit(matched: usize, n: usize) -> i32 {
    if matched == n {
        EXIT_OK
    } else {
        EXIT_ITEM_FAILURES
    }
}

fn bench(a: BenchArgs) -> CliResult {
    let records = load_records(&a.dataset.dataset)?;
    let databases = load_databases(&a.dataset.data_root, &records)?;
    let translator = translator_for(
        a.dataset.gold_oracle.as_ref(),
        a.dataset.translator_url.as_ref(),
        &records,
    )?;
    let (scalar_url, _server) = if a.scalar_apis && a.mode == Mode::Declarative {
        let (u, s) = scalar_server(&a.scalar)?;
        (Some(u), s)
    } else {
        (None, None)
    };
    let mut env = EvalEnv::new(Bridge::new(a.net.bridge_config()), scalar_registry(&a.scalar));
    for d in &databases {
        let db_env = match &scalar_url {
            Some(u) => DbEnv::with_scalar_apis(d, u)?,
            None => DbEnv::plain(d)?,
        };
        env.add(&d.id, db_env);
    }
    let spec = TranslatorSpec {
        translator,
        mode: a.mode,
    };
    let report = run_benchmark(&records, &spec, &env);
    if let Some(p) = &a.dataset.report {
        report.write(p).map_err(|e| Fatal(format!("{}: {e}", p.display())))?;
    }
    println!("{}", serde_json::to_string(&report.summary)?);
    Ok(report_exit(report.summary.matched, report.summary.n))
}

fn sweep(a: SweepArgs) -> CliResult {
    if let Some(bad) = a.fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Fatal(format!("fraction {bad} is outside [0, 1]")));
    }
    let records = load_records(&a.dataset.dataset)?;
    let databases = load_databases(&a.dataset.data_root, &records)?;
    let translator = translator_for(
        a.dataset.gold_oracle.as_ref(),
        a.dataset.translator_url.as_ref(),
        &records,
    )?;
    let result = sweep_replacement(
        &records,
        &a.fractions,
        a.seed,
        &translator,
        &databases,
        &a.net.bridge_config(),
    )?;
    if let Some(p) = &a.dataset.report {
        let reports: Vec<_> = result.reports.iter().map(|r| r.to_json()).collect();
        let mut doc = result.to_json();
        doc["reports"] = serde_json::Value::Array(reports);
        write(p, &pretty(&doc))?;
    }
    emit(a.csv.as_deref(), &result.to_csv())?;
    let all = result.points.iter().all(|p| p.matched == p.n);
    Ok(if all { EXIT_OK } else { EXIT_ITEM_FAILURES })
}

fn load_result(path: &Path) -> Result<ResultTable, Fatal> {
    let v: serde_json::Value = serde_json::from_str(&read(path)?)?;
    ResultTable::from_json(&v).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn eval(a: EvalArgs) -> CliResult {
    let gold = load_result(&a.gold)?;
    let pred = load_result(&a.pred)?;
    let m = rows_match(&gold, &pred, a.ordered);
    println!("{}", serde_json::json!({ "matched": m.matched, "reason": m.reason }));
    Ok(report_exit(m.matched as usize, 1))
}
