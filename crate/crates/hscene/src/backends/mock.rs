//! Scripted backend server for tests and offline runs.
//!
//! A script is an ordered list of rules. Each request is answered by the
//! first unused rule for its endpoint whose fingerprint (if any) matches the
//! request body; the rule is then spent. A request no rule answers gets a 404
//! and is recorded as unmatched. Blob uploads are accepted without a rule.

use std::collections::BTreeSet;
use std::net::{SocketAddr, TcpListener};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use anyhow::{bail, Context, Result};
use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tokio::sync::oneshot;

use super::client::REQUEST_ID_HEADER;
use super::protocol::Endpoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockRule {
    pub endpoint: Endpoint,
    /// Hex SHA-256 of the canonical request body; computed from `request` when that is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request: Option<Value>,
    #[serde(default = "ok_status")]
    pub status: u16,
    pub response: Value,
}

fn ok_status() -> u16 {
    200
}

impl MockRule {
    pub fn new(endpoint: Endpoint, response: Value) -> Self {
        MockRule {
            endpoint,
            fingerprint: None,
            request: None,
            status: 200,
            response,
        }
    }

    /// Only answer a request whose body equals `request`.
    pub fn expecting(mut self, request: &impl Serialize) -> Self {
        let v = serde_json::to_value(request).expect("request serializes");
        self.fingerprint = Some(fingerprint(&v));
        self.request = Some(v);
        self
    }

    fn expected_fingerprint(&self) -> Option<String> {
        self.fingerprint.clone().or_else(|| self.request.as_ref().map(fingerprint))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MockScript {
    pub rules: Vec<MockRule>,
}

impl MockScript {
    pub fn load(path: &Path) -> Result<MockScript> {
        let script: MockScript = crate::io::read_json(path)?;
        script.validate()?;
        Ok(script)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.rules.iter().enumerate() {
            if StatusCode::from_u16(r.status).is_err() {
                bail!("rule {i}: invalid status {}", r.status);
            }
            if let (Some(fp), Some(req)) = (&r.fingerprint, &r.request) {
                if *fp != fingerprint(req) {
                    bail!("rule {i}: fingerprint does not match request");
                }
            }
        }
        Ok(())
    }
}

/// JSON with object keys sorted at every level and no whitespace.
pub fn canonical_json(v: &Value) -> String {
    fn sorted(v: &Value) -> Value {
        match v {
            Value::Object(m) => {
                let mut keys: Vec<&String> = m.keys().collect();
                keys.sort();
                let mut out = serde_json::Map::new();
                for k in keys {
                    out.insert(k.clone(), sorted(&m[k]));
                }
                Value::Object(out)
            }
            Value::Array(a) => Value::Array(a.iter().map(sorted).collect()),
            other => other.clone(),
        }
    }
    sorted(v).to_string()
}

pub fn fingerprint(v: &Value) -> String {
    hex::encode(Sha256::digest(canonical_json(v).as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub seq: usize,
    pub endpoint: String,
    pub fingerprint: String,
    pub request: Value,
    pub status: u16,
    pub response: Value,
    /// Index of the rule that answered, if any.
    pub rule: Option<usize>,
}

#[derive(Debug, Default)]
struct MockState {
    rules: Vec<MockRule>,
    used: Vec<bool>,
    transcript: Vec<TranscriptEntry>,
    blobs: BTreeSet<String>,
}

impl MockState {
    fn answer(&mut self, endpoint: &str, request: Value) -> (u16, Value) {
        let fp = fingerprint(&request);
        let parsed = endpoint.parse::<Endpoint>().ok();
        let hit = (0..self.rules.len()).find(|&i| {
            !self.used[i]
                && Some(self.rules[i].endpoint) == parsed
                && self.rules[i].expected_fingerprint().is_none_or(|want| want == fp)
        });
        let (status, response) = match hit {
            Some(i) => {
                self.used[i] = true;
                (self.rules[i].status, self.rules[i].response.clone())
            }
            None => (404, json!({"error": format!("UnmatchedRequest({fp})")})),
        };
        self.transcript.push(TranscriptEntry {
            seq: self.transcript.len(),
            endpoint: endpoint.to_string(),
            fingerprint: fp,
            request,
            status,
            response: response.clone(),
            rule: hit,
        });
        (status, response)
    }
}

type Shared = Arc<Mutex<MockState>>;

fn echo_id(headers: &HeaderMap, mut resp: Response) -> Response {
    if let Some(id) = headers.get(REQUEST_ID_HEADER) {
        resp.headers_mut().insert(REQUEST_ID_HEADER, id.clone());
    }
    resp
}

async fn handle_call(
    State(state): State<Shared>,
    UrlPath(endpoint): UrlPath<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let request: Value = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(e) => {
            let resp = (StatusCode::BAD_REQUEST, Json(json!({"error": e.to_string()}))).into_response();
            return echo_id(&headers, resp);
        }
    };
    let (status, response) = state.lock().unwrap_or_else(|e| e.into_inner()).answer(&endpoint, request);
    let code = StatusCode::from_u16(status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    echo_id(&headers, (code, Json(response)).into_response())
}

async fn handle_blob(
    State(state): State<Shared>,
    UrlPath(digest): UrlPath<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let actual = hex::encode(Sha256::digest(&body));
    let resp = if actual == digest {
        state.lock().unwrap_or_else(|e| e.into_inner()).blobs.insert(digest.clone());
        (StatusCode::OK, Json(json!({"image": format!("sha256:{digest}")}))).into_response()
    } else {
        (StatusCode::BAD_REQUEST, Json(json!({"error": "digest mismatch"}))).into_response()
    };
    echo_id(&headers, resp)
}

/// A running mock; stops on [`MockServer::shutdown`] or drop.
pub struct MockServer {
    addr: SocketAddr,
    state: Shared,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

/// Start serving `script` on `bind` (e.g. `127.0.0.1:0`) in a background thread.
pub fn serve_mock(script: MockScript, bind: &str) -> Result<MockServer> {
    script.validate()?;
    let listener = TcpListener::bind(bind).with_context(|| format!("binding {bind}"))?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let used = vec![false; script.rules.len()];
    let state: Shared = Arc::new(Mutex::new(MockState {
        rules: script.rules,
        used,
        ..MockState::default()
    }));
    let app = Router::new()
        .route("/v1/blobs/{digest}", put(handle_blob))
        .route("/v1/{endpoint}", post(handle_call))
        .with_state(state.clone());
    let (stop, stopped) = oneshot::channel::<()>();
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let thread = std::thread::spawn(move || {
        runtime.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).expect("listener");
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = stopped.await;
                })
                .await;
        });
    });
    Ok(MockServer {
        addr,
        state,
        stop: Some(stop),
        thread: Some(thread),
    })
}

impl MockServer {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn transcript(&self) -> Vec<TranscriptEntry> {
        self.state.lock().unwrap_or_else(|e| e.into_inner()).transcript.clone()
    }

    /// Fingerprints of requests no rule answered.
    pub fn unmatched(&self) -> Vec<String> {
        self.transcript()
            .into_iter()
            .filter(|t| t.rule.is_none())
            .map(|t| t.fingerprint)
            .collect()
    }

    /// Rules not yet used.
    pub fn remaining(&self) -> usize {
        self.state.lock().unwrap_or_else(|e| e.into_inner()).used.iter().filter(|u| !**u).count()
    }

    pub fn blobs(&self) -> Vec<String> {
        self.state.lock().unwrap_or_else(|e| e.into_inner()).blobs.iter().cloned().collect()
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop_now();
    }
}

impl std::fmt::Debug for MockServer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MockServer").field("addr", &self.addr).finish()
    }
}
