use std::time::Duration;

use serde_json::Value as Json;

use super::{BridgeConfig, BridgeError};
use crate::schema::HttpMethod;
use crate::value::Value;

/// Blocking JSON client with retry on transport failures only.
#[derive(Debug, Clone)]
pub struct HttpClient {
    agent: ureq::Agent,
    retries: u32,
    backoff: Duration,
}

impl HttpClient {
    pub fn new(config: &BridgeConfig) -> Self {
        HttpClient {
            agent: ureq::AgentBuilder::new().timeout(config.timeout).build(),
            retries: config.retries,
            backoff: config.backoff,
        }
    }

    /// Sends one request; query pairs go in the URL, `body` as JSON.
    pub fn request(
        &self,
        method: HttpMethod,
        url: &str,
        query: &[(String, Value)],
        body: Option<&Json>,
    ) -> Result<Json, BridgeError> {
        let mut attempt = 0;
        loop {
            match self.once(method, url, query, body) {
                Err(BridgeError::Transport { .. }) if attempt < self.retries => {
                    std::thread::sleep(self.backoff * 2u32.pow(attempt));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn once(
        &self,
        method: HttpMethod,
        url: &str,
        query: &[(String, Value)],
        body: Option<&Json>,
    ) -> Result<Json, BridgeError> {
        let mut req = match method {
            HttpMethod::Get => self.agent.get(url),
            HttpMethod::Post => self.agent.post(url),
        };
        if method == HttpMethod::Get {
            for (k, v) in query {
                req = req.query(k, &v.to_text().unwrap_or_default());
            }
        }
        let resp = match body {
            Some(b) => req.send_json(b),
            None if method == HttpMethod::Post => req.send_json(serde_json::json!({})),
            None => req.call(),
        };
        match resp {
            Ok(r) => r.into_json::<Json>().map_err(|e| BridgeError::Decode {
                url: url.to_string(),
                message: e.to_string(),
            }),
            Err(ureq::Error::Status(status, r)) => Err(BridgeError::Status {
                url: url.to_string(),
                status,
                body: r.into_string().unwrap_or_default(),
            }),
            Err(ureq::Error::Transport(t)) => Err(BridgeError::Transport {
                url: url.to_string(),
                message: t.to_string(),
            }),
        }
    }
}
