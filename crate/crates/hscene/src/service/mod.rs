//! Review service: a scene queue with revision history behind a JSON HTTP API.
//!
//! | method | path                       | body            |
//! |--------|----------------------------|-----------------|
//! | POST   | `/scenes`                  | [`NewScene`]    |
//! | GET    | `/scenes?status=&page=&per_page=` |          |
//! | GET    | `/scenes/{id}`             |                 |
//! | POST   | `/scenes/{id}/corrections` | [`Correction`]  |
//! | POST   | `/scenes/{id}/approve`     | [`Approval`]    |
//! | GET    | `/export?status=approved`  | JSONL reply     |
//! | POST   | `/blobs`                   | raw image bytes |
//! | GET    | `/blobs/{hex}`             |                 |

mod store;

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::thread::JoinHandle;

use anyhow::{Context, Result};
use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio::sync::oneshot;

pub use store::{
    Approval, Author, Correction, CorrectionOutcome, NewScene, Revision, SceneRecord, SceneSummary, ServiceError,
    Status, Store,
};

impl ServiceError {
    pub fn status_code(&self) -> StatusCode {
        match self {
            ServiceError::UnknownScene(_) => StatusCode::NOT_FOUND,
            ServiceError::StaleBase { .. } | ServiceError::DuplicateImage { .. } | ServiceError::NotApprovable(_) => {
                StatusCode::CONFLICT
            }
            ServiceError::InvalidEdit(_) | ServiceError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Io(_) | ServiceError::Corrupt { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            ServiceError::UnknownScene(_) => "UnknownScene",
            ServiceError::StaleBase { .. } => "StaleBase",
            ServiceError::InvalidEdit(_) => "InvalidEdit",
            ServiceError::DuplicateImage { .. } => "DuplicateImage",
            ServiceError::Invalid(_) => "Invalid",
            ServiceError::NotApprovable(_) => "NotApprovable",
            ServiceError::Io(_) | ServiceError::Corrupt { .. } => "Internal",
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let mut body = json!({"error": self.kind(), "message": self.to_string()});
        match &self {
            ServiceError::StaleBase { latest } => body["latest"] = json!(latest),
            ServiceError::DuplicateImage { scene_id } => body["scene_id"] = json!(scene_id),
            ServiceError::InvalidEdit(e) => body["index"] = json!(e.index),
            _ => {}
        }
        (self.status_code(), Json(body)).into_response()
    }
}

type Shared = Arc<Store>;
type ApiResult<T> = std::result::Result<T, ServiceError>;

/// Runs blocking store work off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Io(std::io::Error::other(e.to_string())))?
}

fn json_body<T: for<'de> Deserialize<'de>>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ServiceError::Invalid(e.to_string()))
}

async fn create_scene(State(store): State<Shared>, body: Bytes) -> ApiResult<Response> {
    let new: NewScene = json_body(&body)?;
    let id = blocking(move || store.enqueue(new)).await?;
    Ok((StatusCode::CREATED, Json(json!({"scene_id": id}))).into_response())
}

#[derive(Debug, Deserialize)]
struct QueueQuery {
    status: Option<String>,
    #[serde(default)]
    page: usize,
    per_page: Option<usize>,
}

const DEFAULT_PAGE: usize = 50;
const MAX_PAGE: usize = 500;

async fn list_scenes(State(store): State<Shared>, Query(q): Query<QueueQuery>) -> ApiResult<Json<Vec<SceneSummary>>> {
    let status = q.status.as_deref().map(str::parse::<Status>).transpose()?;
    let per_page = q.per_page.unwrap_or(DEFAULT_PAGE).clamp(1, MAX_PAGE);
    Ok(Json(store.queue(status, q.page, per_page)))
}

async fn get_scene(State(store): State<Shared>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<SceneRecord>> {
    Ok(Json(store.get(&id)?))
}

async fn correct(State(store): State<Shared>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult<Response> {
    let c: Correction = json_body(&body)?;
    let out = blocking(move || store.apply_correction(&id, &c)).await?;
    Ok((StatusCode::CREATED, Json(out)).into_response())
}

async fn approve(State(store): State<Shared>, UrlPath(id): UrlPath<String>, body: Bytes) -> ApiResult<Json<SceneRecord>> {
    let a: Approval = if body.is_empty() { Approval::default() } else { json_body(&body)? };
    Ok(Json(blocking(move || store.approve(&id, &a)).await?))
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    status: Option<String>,
}

async fn export(State(store): State<Shared>, Query(q): Query<ExportQuery>) -> ApiResult<Response> {
    if let Some(s) = q.status.as_deref() {
        if s.parse::<Status>()? != Status::Approved {
            return Err(ServiceError::Invalid("only approved scenes can be exported".into()));
        }
    }
    let body = crate::io::to_jsonl(&store.export()).map_err(|e| ServiceError::Invalid(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

async fn put_blob(State(store): State<Shared>, body: Bytes) -> ApiResult<Response> {
    let r = blocking(move || store.put_blob(&body)).await?;
    Ok((StatusCode::CREATED, Json(json!({"image": r}))).into_response())
}

async fn get_blob(State(store): State<Shared>, UrlPath(hex): UrlPath<String>) -> ApiResult<Response> {
    if hex.len() != 64 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(ServiceError::Invalid("bad digest".into()));
    }
    let path = store.root().join("blobs").join(hex.to_ascii_lowercase());
    match std::fs::read(&path) {
        Ok(bytes) => Ok(([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Ok((StatusCode::NOT_FOUND, Json(json!({"error": "UnknownBlob"}))).into_response())
        }
        Err(e) => Err(e.into()),
    }
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/scenes", post(create_scene).get(list_scenes))
        .route("/scenes/{id}", get(get_scene))
        .route("/scenes/{id}/corrections", post(correct))
        .route("/scenes/{id}/approve", post(approve))
        .route("/export", get(export))
        .route("/blobs", post(put_blob))
        .route("/blobs/{hex}", get(get_blob))
        .with_state(store)
}

/// A service running on a background thread; stops on drop.
pub struct ServiceHandle {
    addr: SocketAddr,
    store: Arc<Store>,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl ServiceHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        if let Some(s) = self.stop.take() {
            let _ = s.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        self.stop_now();
    }
}

/// Open the store at `root` and serve it on `bind` in the background.
pub fn spawn_service(root: &Path, bind: &str) -> Result<ServiceHandle> {
    let store = Arc::new(Store::open(root).with_context(|| format!("opening store {}", root.display()))?);
    let listener = std::net::TcpListener::bind(bind).with_context(|| format!("binding {bind}"))?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let app = router(store.clone());
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    let (stop, stopped) = oneshot::channel::<()>();
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
    Ok(ServiceHandle {
        addr,
        store,
        stop: Some(stop),
        thread: Some(thread),
    })
}

/// Serve in the foreground until the process is interrupted.
pub fn serve(root: &Path, bind: &str) -> Result<()> {
    let store = Arc::new(Store::open(root).with_context(|| format!("opening store {}", root.display()))?);
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(bind).await.with_context(|| format!("binding {bind}"))?;
        eprintln!("serving on http://{}", listener.local_addr()?);
        axum::serve(listener, router(store))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
