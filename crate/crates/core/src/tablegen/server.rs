use std::collections::BTreeMap;
use std::sync::Arc;

use super::{TableApiEndpoint, TablegenError};
use crate::http_server::{serve, Handler, HttpRequest, HttpResponse, ServerHandle};

/// Routes `POST /<table>` to its endpoint. Holds immutable data only.
pub struct TableApiHandler {
    routes: BTreeMap<String, TableApiEndpoint>,
}

impl TableApiHandler {
    pub fn new(endpoints: Vec<TableApiEndpoint>) -> Result<Self, TablegenError> {
        let mut routes = BTreeMap::new();
        for e in endpoints {
            let key = e.route.to_ascii_lowercase();
            if routes.contains_key(&key) {
                return Err(TablegenError::DuplicateRoute(e.route));
            }
            routes.insert(key, e);
        }
        Ok(TableApiHandler { routes })
    }
}

impl Handler for TableApiHandler {
    fn handle(&self, req: &HttpRequest) -> HttpResponse {
        let Some(endpoint) = self.routes.get(&req.path.trim_end_matches('/').to_ascii_lowercase()) else {
            return HttpResponse::error(404, format!("no table API at {}", req.path));
        };
        if req.method != "POST" {
            return HttpResponse::error(405, format!("method {} not allowed", req.method));
        }
        let body = match req.json() {
            Ok(b) => b,
            Err(e) => return HttpResponse::error(400, e),
        };
        match endpoint.filter(&body) {
            Ok(t) => HttpResponse::json(200, &TableApiEndpoint::rows_json(&t)),
            Err(e) => HttpResponse::error(400, e.to_string()),
        }
    }
}

/// Serves every endpoint on `addr` (port 0 picks a free port).
pub fn serve_tables(
    endpoints: Vec<TableApiEndpoint>,
    addr: &str,
    workers: usize,
) -> Result<ServerHandle, TablegenError> {
    let handler = TableApiHandler::new(endpoints)?;
    serve(addr, Arc::new(handler), workers).map_err(|e| TablegenError::Bind(e.to_string()))
}
