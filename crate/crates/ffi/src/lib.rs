//! C ABI over the hybridq engine.
//!
//! Every fallible function returns an [`HqStatus`]. On failure the message is
//! kept per thread and read back with [`hq_last_error`]. Strings handed out
//! by this library are released with [`hq_string_free`]; engines with
//! [`hq_engine_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use libc::c_char;

use hybridq::bridge::{Bridge, BridgeConfig, BridgeError, ScalarRegistry};
use hybridq::data::load_database_dir;
use hybridq::eval::{rows_match, DbEnv, EvalEnv, Mode};
use hybridq::executor::ExecError;
use hybridq::sql::plan_query;
use hybridq::{ResultTable, Value};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HqStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidJson = 3,
    Data = 4,
    Sql = 5,
    Plan = 6,
    Api = 7,
    InvalidArgument = 8,
    Panic = 9,
}

/// A loaded database plus the view and bridge used to query it.
pub struct HqEngine {
    env: EvalEnv,
    db_id: String,
}

struct Failure(HqStatus, String);

impl From<ExecError> for Failure {
    fn from(e: ExecError) -> Self {
        let status = match &e {
            ExecError::Sql { .. } | ExecError::Timeout(_) => HqStatus::Sql,
            ExecError::Plan(_) => HqStatus::Plan,
            ExecError::Bridge(_) => HqStatus::Api,
            ExecError::Data(_) | ExecError::Schema(_) => HqStatus::Data,
        };
        Failure(status, e.to_string())
    }
}

impl From<BridgeError> for Failure {
    fn from(e: BridgeError) -> Self {
        Failure(HqStatus::Api, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HqStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HqStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            HqStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or points to a nul-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(HqStatus::NullArgument, format!("`{what}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(HqStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

/// # Safety
/// `p` is null or points to a nul-terminated string.
unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

fn json_arg(text: &str, what: &str) -> Result<serde_json::Value, Failure> {
    serde_json::from_str(text).map_err(|e| Failure(HqStatus::InvalidJson, format!("`{what}`: {e}")))
}

fn table_arg(text: &str, what: &str) -> Result<ResultTable, Failure> {
    ResultTable::from_json(&json_arg(text, what)?).map_err(|e| Failure(HqStatus::InvalidJson, format!("`{what}`: {e}")))
}

/// # Safety
/// `out` is null or valid for one pointer write.
unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(HqStatus::NullArgument, "`out` is null".into()));
    }
    let c = CString::new(s).map_err(|_| Failure(HqStatus::InvalidUtf8, "result contains a nul byte".into()))?;
    *out = c.into_raw();
    Ok(())
}

/// # Safety
/// `engine` is null or was returned by [`hq_engine_open`] and not yet freed.
unsafe fn engine_arg<'a>(engine: *const HqEngine) -> Result<&'a HqEngine, Failure> {
    engine
        .as_ref()
        .ok_or_else(|| Failure(HqStatus::NullArgument, "`engine` is null".into()))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn hq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn hq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads the database directory `data_dir` (schema.sql plus one CSV per table).
/// With a non-null `scalar_api_url`, the scalar APIs served there become
/// virtual tables and back the SQL functions; otherwise the functions run
/// in-process.
///
/// # Safety
/// String arguments are null or nul-terminated. `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hq_engine_open(
    data_dir: *const c_char,
    scalar_api_url: *const c_char,
    out: *mut *mut HqEngine,
) -> HqStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(HqStatus::NullArgument, "`out` is null".into()));
        }
        *out = ptr::null_mut();
        let dir = str_arg(data_dir, "data_dir")?;
        let scalar_url = opt_str_arg(scalar_api_url, "scalar_api_url")?;
        let data = load_database_dir(Path::new(dir)).map_err(|e| Failure(HqStatus::Data, e.to_string()))?;
        let (db, scalars) = match scalar_url {
            Some(url) => (DbEnv::with_scalar_apis(&data, url)?, ScalarRegistry::remote(url)),
            None => (DbEnv::plain(&data)?, ScalarRegistry::local()),
        };
        let mut env = EvalEnv::new(Bridge::new(BridgeConfig::from_env()), scalars);
        env.add(&data.id, db);
        *out = Box::into_raw(Box::new(HqEngine { env, db_id: data.id }));
        Ok(())
    })
}

/// # Safety
/// `engine` is null or was returned by [`hq_engine_open`] and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hq_engine_free(engine: *mut HqEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Runs `sql` and writes the result as `{"columns": [...], "rows": [[...]]}`.
/// `mode` is `declarative` (virtual tables) or `declarative2` (SQL functions);
/// null selects `declarative`.
///
/// # Safety
/// `engine` comes from [`hq_engine_open`]; strings are null or nul-terminated;
/// `out_json` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hq_engine_execute(
    engine: *const HqEngine,
    sql: *const c_char,
    mode: *const c_char,
    out_json: *mut *mut c_char,
) -> HqStatus {
    guard(|| {
        let e = engine_arg(engine)?;
        let sql = str_arg(sql, "sql")?;
        let mode: Mode = match opt_str_arg(mode, "mode")? {
            Some(m) => m.parse().map_err(|msg| Failure(HqStatus::InvalidArgument, msg))?,
            None => Mode::Declarative,
        };
        let table = e.env.execute(&e.db_id, sql, mode)?;
        write_string(out_json, table.to_json().to_string())
    })
}

/// Writes the materialization plan for `sql` against the engine's view as JSON.
///
/// # Safety
/// As for [`hq_engine_execute`].
#[no_mangle]
pub unsafe extern "C" fn hq_engine_plan(
    engine: *const HqEngine,
    sql: *const c_char,
    out_json: *mut *mut c_char,
) -> HqStatus {
    guard(|| {
        let e = engine_arg(engine)?;
        let sql = str_arg(sql, "sql")?;
        let view = &e.env.dbs[&e.db_id].view;
        let plan = plan_query(sql, view).map_err(|err| Failure(HqStatus::Plan, err.to_string()))?;
        write_string(out_json, plan.to_json().to_string())
    })
}

/// Calls the scalar API `name` in-process. `args_json` is a JSON array of
/// arguments; the result is written as a JSON scalar.
///
/// # Safety
/// Strings are null or nul-terminated; `out_json` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hq_scalar_invoke(
    name: *const c_char,
    args_json: *const c_char,
    out_json: *mut *mut c_char,
) -> HqStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let args = match json_arg(str_arg(args_json, "args_json")?, "args_json")? {
            serde_json::Value::Array(a) => a.iter().map(Value::from_json).collect::<Vec<_>>(),
            _ => return Err(Failure(HqStatus::InvalidJson, "`args_json` must be an array".into())),
        };
        let v = ScalarRegistry::local().invoke_scalar(name, &args)?;
        write_string(out_json, v.to_json().to_string())
    })
}

/// Compares two results in `{"columns", "rows"}` form. Writes 1 to `matched`
/// when the predicted result covers the gold one, else 0.
///
/// # Safety
/// Strings are null or nul-terminated; `matched` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn hq_rows_match(
    gold_json: *const c_char,
    pred_json: *const c_char,
    ordered: bool,
    matched: *mut i32,
) -> HqStatus {
    guard(|| {
        if matched.is_null() {
            return Err(Failure(HqStatus::NullArgument, "`matched` is null".into()));
        }
        let gold = table_arg(str_arg(gold_json, "gold_json")?, "gold_json")?;
        let pred = table_arg(str_arg(pred_json, "pred_json")?, "pred_json")?;
        *matched = rows_match(&gold, &pred, ordered).matched as i32;
        Ok(())
    })
}

/// # Safety
/// `s` is null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
