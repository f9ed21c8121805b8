//! Blocking JSON-over-HTTP client with retries, a deadline and an in-flight cap.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use reqwest::blocking::{Client, RequestBuilder};
use reqwest::StatusCode;
use serde::Serialize;
use serde_json::Value;

use super::protocol::Endpoint;
use super::BackendError;

pub const REQUEST_ID_HEADER: &str = "x-request-id";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Total tries per call, including the first.
    pub attempts: u32,
    /// Delay before the second try; doubles after each further failure.
    pub backoff: Duration,
    /// Budget for one call across all tries.
    pub deadline: Duration,
    pub max_in_flight: usize,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            backoff: Duration::from_millis(250),
            deadline: Duration::from_secs(30),
            max_in_flight: 4,
        }
    }
}

#[derive(Debug)]
struct Gate {
    busy: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn acquire(&self) -> Permit<'_> {
        let mut busy = self.busy.lock().unwrap_or_else(|e| e.into_inner());
        while *busy >= self.limit {
            busy = self.freed.wait(busy).unwrap_or_else(|e| e.into_inner());
        }
        *busy += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut busy = self.0.busy.lock().unwrap_or_else(|e| e.into_inner());
        *busy -= 1;
        self.0.freed.notify_one();
    }
}

/// Shareable across threads; clones share the in-flight limit.
#[derive(Debug, Clone)]
pub struct BackendClient {
    base: String,
    token: Option<String>,
    policy: RetryPolicy,
    http: Client,
    gate: Arc<Gate>,
    next_id: Arc<AtomicU64>,
}

impl BackendClient {
    pub fn new(base_url: &str, token: Option<String>, policy: RetryPolicy) -> Result<Self, BackendError> {
        let http = Client::builder()
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(BackendClient {
            base: base_url.trim_end_matches('/').to_string(),
            token,
            policy,
            http,
            gate: Arc::new(Gate {
                busy: Mutex::new(0),
                freed: Condvar::new(),
                limit: policy.max_in_flight.max(1),
            }),
            next_id: Arc::new(AtomicU64::new(1)),
        })
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    pub fn policy(&self) -> RetryPolicy {
        self.policy
    }

    fn authorized(&self, rb: RequestBuilder) -> RequestBuilder {
        match &self.token {
            Some(t) => rb.bearer_auth(t),
            None => rb,
        }
    }

    /// POST `body` to the endpoint and return the JSON reply.
    ///
    /// Connection failures and 5xx replies are retried; any other non-2xx
    /// reply is a refusal and returned at once.
    pub fn call(&self, endpoint: Endpoint, body: &impl Serialize) -> Result<Value, BackendError> {
        let body = serde_json::to_vec(body).map_err(|e| BackendError::SchemaViolation(e.to_string()))?;
        let url = format!("{}{}", self.base, endpoint.path());
        self.with_retries(endpoint.as_str(), |timeout, id| {
            self.authorized(self.http.post(&url))
                .timeout(timeout)
                .header(REQUEST_ID_HEADER, id)
                .header(reqwest::header::CONTENT_TYPE, "application/json")
                .body(body.clone())
        })
    }

    /// Upload image bytes; returns the `sha256:<hex>` reference used in requests.
    pub fn upload_blob(&self, bytes: &[u8]) -> Result<String, BackendError> {
        let reference = crate::io::content_ref(bytes);
        let url = format!("{}/v1/blobs/{}", self.base, reference.trim_start_matches("sha256:"));
        self.with_retries("blobs", |timeout, id| {
            self.authorized(self.http.put(&url))
                .timeout(timeout)
                .header(REQUEST_ID_HEADER, id)
                .body(bytes.to_vec())
        })?;
        Ok(reference)
    }

    fn with_retries(
        &self,
        what: &str,
        build: impl Fn(Duration, &str) -> RequestBuilder,
    ) -> Result<Value, BackendError> {
        let _permit = self.gate.acquire();
        let id = format!("req-{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let start = Instant::now();
        let mut last = String::from("deadline exhausted before first attempt");
        let mut tries = 0;
        for attempt in 0..self.policy.attempts {
            let Some(remaining) = self.policy.deadline.checked_sub(start.elapsed()).filter(|d| !d.is_zero()) else {
                break;
            };
            tries += 1;
            match build(remaining, &id).send() {
                Ok(resp) if resp.status().is_success() => {
                    if let Some(echo) = resp.headers().get(REQUEST_ID_HEADER) {
                        if echo.as_bytes() != id.as_bytes() {
                            return Err(BackendError::SchemaViolation(format!("{what}: reply for another request")));
                        }
                    }
                    if resp.status() == StatusCode::NO_CONTENT {
                        return Ok(Value::Null);
                    }
                    return resp
                        .json::<Value>()
                        .map_err(|e| BackendError::SchemaViolation(format!("{what}: reply is not JSON: {e}")));
                }
                Ok(resp) if resp.status().is_server_error() => {
                    last = format!("HTTP {}", resp.status());
                }
                Ok(resp) => {
                    let status = resp.status();
                    let text = resp.text().unwrap_or_default();
                    let reason = serde_json::from_str::<Value>(&text)
                        .ok()
                        .and_then(|v| v.get("error").and_then(Value::as_str).map(str::to_string))
                        .unwrap_or(text);
                    return Err(BackendError::BackendRefusal(format!("{what}: HTTP {status}: {reason}")));
                }
                Err(e) => last = e.to_string(),
            }
            if attempt + 1 < self.policy.attempts {
                let wait = self.policy.backoff.saturating_mul(1 << attempt.min(16));
                let left = self.policy.deadline.saturating_sub(start.elapsed());
                thread::sleep(wait.min(left));
            }
        }
        Err(BackendError::Transport(format!("{what}: gave up after {tries} attempt(s): {last}")))
    }
}
