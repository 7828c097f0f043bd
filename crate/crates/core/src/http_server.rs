//! Minimal threaded JSON-over-HTTP host shared by the scalar and tablegen servers.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use thiserror::Error;
use tiny_http::{Header, Response, Server};

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("cannot bind {addr}: {message}")]
    BindError { addr: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpRequest {
    pub method: String,
    pub path: String,
    pub query: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl HttpRequest {
    /// The body as a JSON value; an empty body reads as `{}`.
    pub fn json(&self) -> Result<serde_json::Value, String> {
        if self.body.iter().all(u8::is_ascii_whitespace) {
            return Ok(serde_json::json!({}));
        }
        serde_json::from_slice(&self.body).map_err(|e| format!("invalid JSON body: {e}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpResponse {
    pub status: u16,
    pub content_type: &'static str,
    pub body: String,
}

impl HttpResponse {
    pub fn json(status: u16, v: &serde_json::Value) -> Self {
        HttpResponse {
            status,
            content_type: "application/json",
            body: v.to_string(),
        }
    }

    pub fn error(status: u16, message: impl Into<String>) -> Self {
        Self::json(status, &serde_json::json!({ "error": message.into() }))
    }

    pub fn text(status: u16, content_type: &'static str, body: String) -> Self {
        HttpResponse {
            status,
            content_type,
            body,
        }
    }
}

pub trait Handler: Send + Sync + 'static {
    fn handle(&self, req: &HttpRequest) -> HttpResponse;
}

/// A running server. Dropping the handle shuts it down.
pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    server: Arc<Server>,
    workers: Mutex<Vec<JoinHandle<()>>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting requests and joins the workers. Idempotent.
    pub fn shutdown(&self) {
        self.shutdown.store(true, Ordering::SeqCst);
        let workers: Vec<JoinHandle<()>> = match self.workers.lock() {
            Ok(mut w) => w.drain(..).collect(),
            Err(p) => p.into_inner().drain(..).collect(),
        };
        for _ in &workers {
            self.server.unblock();
        }
        for w in workers {
            let _ = w.join();
        }
    }

    pub fn is_running(&self) -> bool {
        !self.shutdown.load(Ordering::SeqCst)
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn split_url(url: &str) -> (String, Vec<(String, String)>) {
    let (path, query) = url.split_once('?').unwrap_or((url, ""));
    let pairs = url::form_urlencoded::parse(query.as_bytes())
        .map(|(k, v)| (k.into_owned(), v.into_owned()))
        .collect();
    let path = url::form_urlencoded::parse(format!("p={path}").as_bytes())
        .next()
        .map(|(_, v)| v.into_owned())
        .unwrap_or_else(|| path.to_string());
    (path, pairs)
}

/// Binds `addr` (port 0 picks a free port) and serves with `workers` threads.
pub fn serve(addr: &str, handler: Arc<dyn Handler>, workers: usize) -> Result<ServerHandle, ServerError> {
    let server = Server::http(addr).map_err(|e| ServerError::BindError {
        addr: addr.to_string(),
        message: e.to_string(),
    })?;
    let bound = server.server_addr().to_ip().ok_or_else(|| ServerError::BindError {
        addr: addr.to_string(),
        message: "not an IP listener".into(),
    })?;
    let server = Arc::new(server);
    let shutdown = Arc::new(AtomicBool::new(false));
    let mut handles = Vec::new();
    for i in 0..workers.max(1) {
        let server = Arc::clone(&server);
        let shutdown = Arc::clone(&shutdown);
        let handler = Arc::clone(&handler);
        let h = std::thread::Builder::new()
            .name(format!("http-{}-{i}", bound.port()))
            .spawn(move || worker(&server, &shutdown, handler.as_ref()))
            .expect("spawn server worker");
        handles.push(h);
    }
    log::info!("serving on http://{bound}");
    Ok(ServerHandle {
        addr: bound,
        shutdown,
        server,
        workers: Mutex::new(handles),
    })
}

fn worker(server: &Server, shutdown: &AtomicBool, handler: &dyn Handler) {
    while !shutdown.load(Ordering::SeqCst) {
        let mut req = match server.recv_timeout(Duration::from_millis(100)) {
            Ok(Some(r)) => r,
            Ok(None) => continue,
            Err(e) => {
                log::warn!("accept failed: {e}");
                continue;
            }
        };
        let (path, query) = split_url(req.url());
        let mut body = Vec::new();
        let resp = match req.as_reader().read_to_end(&mut body) {
            Ok(_) => {
                let r = HttpRequest {
                    method: req.method().as_str().to_ascii_uppercase(),
                    path,
                    query,
                    body,
                };
                handler.handle(&r)
            }
            Err(e) => HttpResponse::error(400, format!("cannot read body: {e}")),
        };
        let header = Header::from_bytes(&b"Content-Type"[..], resp.content_type.as_bytes()).expect("static header");
        let out = Response::from_string(resp.body)
            .with_status_code(resp.status)
            .with_header(header);
        if let Err(e) = req.respond(out) {
            log::debug!("client went away: {e}");
        }
    }
}
