//! HTTP host for the scalar APIs: `POST /<name>` with a JSON object of named
//! inputs answers with the inputs echoed plus the output key.

use std::sync::Arc;

use serde_json::{json, Map};

use super::{call, signature, signatures, GeoProvider, ScalarError};
use crate::http_server::{serve, Handler, HttpRequest, HttpResponse, ServerError, ServerHandle};
use crate::value::Value;

pub struct ScalarHandler {
    geo: Box<dyn GeoProvider>,
}

impl ScalarHandler {
    pub fn new(geo: Box<dyn GeoProvider>) -> Self {
        ScalarHandler { geo }
    }

    fn invoke(&self, name: &str, inputs: &Map<String, serde_json::Value>) -> HttpResponse {
        let Some(sig) = signature(name) else {
            return HttpResponse::error(404, format!("no scalar API at /{name}"));
        };
        let mut args = Vec::with_capacity(sig.params.len());
        for p in &sig.params {
            let found = inputs
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case(&p.name))
                .map(|(_, v)| v);
            match found {
                Some(v) if v.is_object() || v.is_array() => {
                    return HttpResponse::error(400, format!("parameter `{}` must be a scalar", p.name))
                }
                Some(v) => args.push(Value::from_json(v)),
                None => return HttpResponse::error(400, format!("missing required parameter `{}`", p.name)),
            }
        }
        match call(&sig.name, &args, self.geo.as_ref()) {
            Ok(out) => {
                let mut obj = Map::new();
                for (p, a) in sig.params.iter().zip(&args) {
                    obj.insert(p.name.clone(), a.to_json());
                }
                obj.insert(sig.output.0.clone(), out.to_json());
                HttpResponse::json(200, &serde_json::Value::Object(obj))
            }
            Err(e @ ScalarError::PlaceNotFound(_)) => HttpResponse::error(404, e.to_string()),
            Err(e @ ScalarError::Provider(_)) => HttpResponse::error(502, e.to_string()),
            Err(e) => HttpResponse::error(400, e.to_string()),
        }
    }
}

impl Handler for ScalarHandler {
    fn handle(&self, req: &HttpRequest) -> HttpResponse {
        let name = req.path.trim_matches('/');
        match req.method.as_str() {
            "GET" if name.is_empty() || name == "apis" => {
                let list: Vec<serde_json::Value> = signatures()
                    .iter()
                    .map(|s| {
                        json!({
                            "name": s.name,
                            "category": s.category.to_string(),
                            "inputs": s.params.iter().map(|p| json!([p.name, p.dtype.to_string()])).collect::<Vec<_>>(),
                            "output": [s.output.0, s.output.1.to_string()],
                            "description": s.description,
                        })
                    })
                    .collect();
                HttpResponse::json(200, &serde_json::Value::Array(list))
            }
            "GET" => {
                let obj: Map<String, serde_json::Value> = req
                    .query
                    .iter()
                    .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                    .collect();
                self.invoke(name, &obj)
            }
            "POST" => match req.json() {
                Ok(serde_json::Value::Object(mut obj)) => {
                    obj.remove("dnf");
                    for (k, v) in &req.query {
                        obj.entry(k.clone())
                            .or_insert_with(|| serde_json::Value::String(v.clone()));
                    }
                    self.invoke(name, &obj)
                }
                Ok(_) => HttpResponse::error(400, "body must be a JSON object"),
                Err(e) => HttpResponse::error(400, e),
            },
            m => HttpResponse::error(405, format!("method {m} not allowed")),
        }
    }
}

pub fn serve_scalars(addr: &str, geo: Box<dyn GeoProvider>, workers: usize) -> Result<ServerHandle, ServerError> {
    serve(addr, Arc::new(ScalarHandler::new(geo)), workers)
}
