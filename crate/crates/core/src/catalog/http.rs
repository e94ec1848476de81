//! JSON-over-HTTP front end. The caller is named by the `X-User` header.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use super::api::{self, render};
use super::Caller;
use crate::error::{Error, Result};
use crate::lake::{parse_id, Lake};

pub const USER_HEADER: &str = "x-user";

pub fn status_of(error: &Error) -> StatusCode {
    match error {
        Error::NotFound(_) | Error::MissingNode(_) => StatusCode::NOT_FOUND,
        Error::Unauthorized(_) => StatusCode::UNAUTHORIZED,
        Error::Precondition(_) => StatusCode::CONFLICT,
        Error::Unreachable(_) => StatusCode::UNPROCESSABLE_ENTITY,
        Error::ReadOnly | Error::StoreLocked(_) => StatusCode::SERVICE_UNAVAILABLE,
        e if e.is_user_error() => StatusCode::BAD_REQUEST,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

fn json_response(status: StatusCode, value: &Value) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], render(value)).into_response()
}

fn error_response(error: &Error) -> Response {
    let status = status_of(error);
    if status == StatusCode::INTERNAL_SERVER_ERROR {
        tracing::error!(%error, "request failed");
    }
    json_response(status, &json!({ "error": error.to_string() }))
}

type Reply = Result<(StatusCode, Value)>;

/// Resolves the caller and runs `op` off the async executor.
async fn run<F>(lake: Arc<Lake>, headers: &HeaderMap, op: F) -> Response
where
    F: FnOnce(&Lake, &Caller) -> Reply + Send + 'static,
{
    let user = headers.get(USER_HEADER).and_then(|v| v.to_str().ok()).map(str::to_string);
    let result = tokio::task::spawn_blocking(move || {
        let caller = lake.caller(user.as_deref())?;
        op(&lake, &caller)
    })
    .await;
    match result {
        Ok(Ok((status, value))) => json_response(status, &value),
        Ok(Err(e)) => error_response(&e),
        Err(join) => {
            tracing::error!(error = %join, "request task panicked");
            json_response(StatusCode::INTERNAL_SERVER_ERROR, &json!({ "error": "internal error" }))
        }
    }
}

fn body<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| Error::Validation(format!("request body: {e}")))
}

fn ok(value: Value) -> Reply {
    Ok((StatusCode::OK, value))
}

async fn add_source(State(lake): State<Arc<Lake>>, headers: HeaderMap, bytes: Bytes) -> Response {
    run(lake, &headers, move |lake, caller| {
        let request: api::SourceBody = body(&bytes)?;
        match api::add_source(lake, caller, &request)? {
            Some(created) => Ok((StatusCode::CREATED, created)),
            None => Err(Error::Unreachable(request.location)),
        }
    })
    .await
}

async fn ingest(State(lake): State<Arc<Lake>>, headers: HeaderMap, Path(id): Path<String>, bytes: Bytes) -> Response {
    run(lake, &headers, move |lake, caller| {
        let request: api::IngestBody = if bytes.is_empty() { Default::default() } else { body(&bytes)? };
        ok(api::ingest(lake, caller, parse_id(&id)?, &request)?)
    })
    .await
}

async fn search(State(lake): State<Arc<Lake>>, headers: HeaderMap, Query(q): Query<HashMap<String, String>>) -> Response {
    run(lake, &headers, move |lake, caller| ok(api::search(lake, caller, q.get("q").map_or("", String::as_str))?))
        .await
}

async fn dataset(State(lake): State<Arc<Lake>>, headers: HeaderMap, Path(id): Path<String>) -> Response {
    run(lake, &headers, move |lake, caller| ok(api::dataset(lake, caller, parse_id(&id)?)?)).await
}

async fn schema(State(lake): State<Arc<Lake>>, headers: HeaderMap, Path(id): Path<String>) -> Response {
    run(lake, &headers, move |lake, caller| ok(api::schema(lake, caller, parse_id(&id)?)?)).await
}

async fn lineage(State(lake): State<Arc<Lake>>, headers: HeaderMap, Path(id): Path<String>) -> Response {
    run(lake, &headers, move |lake, caller| ok(api::lineage(lake, caller, parse_id(&id)?)?)).await
}

async fn relationships(State(lake): State<Arc<Lake>>, headers: HeaderMap, Path(id): Path<String>) -> Response {
    run(lake, &headers, move |lake, caller| ok(api::relationships(lake, caller, parse_id(&id)?)?)).await
}

async fn link(State(lake): State<Arc<Lake>>, headers: HeaderMap, Path(id): Path<String>) -> Response {
    run(lake, &headers, move |lake, caller| ok(api::link(lake, caller, parse_id(&id)?)?)).await
}

async fn annotate(State(lake): State<Arc<Lake>>, headers: HeaderMap, Path(id): Path<String>, bytes: Bytes) -> Response {
    run(lake, &headers, move |lake, caller| ok(api::annotate(lake, caller, parse_id(&id)?, &body(&bytes)?)?)).await
}

async fn mark(State(lake): State<Arc<Lake>>, headers: HeaderMap, Path(id): Path<String>, bytes: Bytes) -> Response {
    run(lake, &headers, move |lake, caller| {
        Ok((StatusCode::CREATED, api::mark(lake, caller, parse_id(&id)?, &body(&bytes)?)?))
    })
    .await
}

async fn relate(State(lake): State<Arc<Lake>>, headers: HeaderMap, bytes: Bytes) -> Response {
    run(lake, &headers, move |lake, caller| Ok((StatusCode::CREATED, api::relate(lake, caller, &body(&bytes)?)?))).await
}

async fn stats(State(lake): State<Arc<Lake>>, headers: HeaderMap) -> Response {
    run(lake, &headers, |lake, _| ok(api::stats(lake)?)).await
}

async fn global_dict(State(lake): State<Arc<Lake>>, headers: HeaderMap) -> Response {
    run(lake, &headers, |lake, _| ok(api::global_dict(lake))).await
}

async fn put_global(State(lake): State<Arc<Lake>>, headers: HeaderMap, bytes: Bytes) -> Response {
    run(lake, &headers, move |lake, _| ok(api::put_global(lake, &body(&bytes)?)?)).await
}

async fn not_found() -> Response {
    json_response(StatusCode::NOT_FOUND, &json!({ "error": "no such route" }))
}

/// All routes. Static files under `/ui` come from the configured UI
/// directory when there is one.
pub fn router(lake: Arc<Lake>) -> Router {
    let ui_dir = lake.config().ui_dir.clone();
    let api = Router::new()
        .route("/sources", post(add_source))
        .route("/sources/{id}/ingest", post(ingest))
        .route("/datasets", get(search))
        .route("/datasets/{id}", get(dataset))
        .route("/datasets/{id}/schema", get(schema))
        .route("/datasets/{id}/lineage", get(lineage))
        .route("/datasets/{id}/relationships", get(relationships))
        .route("/datasets/{id}/link", post(link))
        .route("/datasets/{id}/tags", post(annotate))
        .route("/datasets/{id}/sensitivity", post(mark))
        .route("/relationships", post(relate))
        .route("/stats", get(stats))
        .route("/global-dict", get(global_dict).post(put_global))
        .fallback(not_found)
        .with_state(lake);
    match ui_dir {
        Some(dir) => api.nest_service("/ui", ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until ctrl-c.
pub async fn serve(lake: Arc<Lake>, addr: SocketAddr) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "catalog service listening");
    axum::serve(listener, router(lake))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
