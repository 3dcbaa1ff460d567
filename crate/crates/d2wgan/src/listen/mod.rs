//! Blind listening-test service and its `/v1` HTTP API.
//!
//! | method | path                              | success                         |
//! |--------|-----------------------------------|---------------------------------|
//! | POST   | /v1/sessions                      | 201 new session, 200 existing   |
//! | GET    | /v1/sessions/{id}                 | 200 progress                    |
//! | GET    | /v1/sessions/{id}/next            | 200 audio/wav, 204 when done    |
//! | GET    | /v1/sessions/{id}/reference       | 200 audio/wav (paired protocol) |
//! | POST   | /v1/sessions/{id}/grades          | 200 ack                         |
//! | GET    | /v1/results?group_by=...          | 200 table                       |
//! | GET    | /v1/health                        | 200                             |
//!
//! Errors are `{"error": {"code": ..., "message": ...}}`.

mod service;

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use d2wgan_core::evaluation::{OdgStats, OdgTable};
use serde::Deserialize;
use serde_json::{json, Value};

pub use service::{
    Catalog, GradeAck, ListenService, NextItem, Protocol, ServiceError, SessionView, EVENT_LOG,
    SNAPSHOT,
};

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            Self::InvalidRequest(_) | Self::InvalidGroupBy(_) => StatusCode::BAD_REQUEST,
            Self::GradeOutOfScale(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Self::StalePresentation { .. } | Self::AlreadyGraded(_) | Self::SessionComplete => {
                StatusCode::CONFLICT
            }
            Self::SessionNotFound(_) | Self::NotPaired => StatusCode::NOT_FOUND,
            Self::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = json!({"error": {"code": self.code(), "message": self.to_string()}});
        (status, Json(body)).into_response()
    }
}

type Shared = Arc<ListenService>;
type HResult<T> = Result<T, ServiceError>;

/// Build the router; `static_dir`, when given, is served under `/`.
pub fn router(service: Shared, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/v1/health", get(health))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(session))
        .route("/v1/sessions/{id}/next", get(next))
        .route("/v1/sessions/{id}/reference", get(reference))
        .route("/v1/sessions/{id}/grades", post(grade))
        .route("/v1/results", get(results))
        .with_state(service);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

async fn health(State(svc): State<Shared>) -> Json<Value> {
    Json(json!({"status": "ok", "presentations": svc.catalog().len()}))
}

#[derive(Deserialize)]
struct CreateSession {
    grader_id: String,
    seed: Option<u64>,
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> HResult<T> {
    serde_json::from_slice(body)
        .map_err(|e| ServiceError::InvalidRequest(format!("bad request body: {e}")))
}

async fn create_session(State(svc): State<Shared>, body: axum::body::Bytes) -> HResult<Response> {
    let req: CreateSession = parse_body(&body)?;
    let (view, created) = svc.create_session(&req.grader_id, req.seed)?;
    let status = if created {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    };
    Ok((status, Json(view)).into_response())
}

async fn session(State(svc): State<Shared>, Path(id): Path<String>) -> HResult<Json<SessionView>> {
    Ok(Json(svc.session(&id)?))
}

fn wav_response(
    bytes: Vec<u8>,
    presentation_id: &str,
    progress: Option<(usize, usize)>,
) -> HResult<Response> {
    let mut resp = (StatusCode::OK, bytes).into_response();
    let h = resp.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_static("audio/wav"));
    h.insert(header::CACHE_CONTROL, HeaderValue::from_static("no-store"));
    let val =
        |s: String| HeaderValue::from_str(&s).map_err(|e| ServiceError::Internal(e.to_string()));
    h.insert("x-presentation-id", val(presentation_id.to_string())?);
    if let Some((done, total)) = progress {
        h.insert("x-progress", val(format!("{done}/{total}"))?);
    }
    Ok(resp)
}

async fn read_clip(path: PathBuf) -> HResult<Vec<u8>> {
    tokio::fs::read(&path)
        .await
        .map_err(|e| ServiceError::Internal(format!("{}: {e}", path.display())))
}

async fn next(State(svc): State<Shared>, Path(id): Path<String>) -> HResult<Response> {
    match svc.next(&id)? {
        NextItem::Complete => {
            let mut resp = StatusCode::NO_CONTENT.into_response();
            resp.headers_mut()
                .insert("x-session-complete", HeaderValue::from_static("true"));
            Ok(resp)
        }
        NextItem::Clip {
            presentation_id,
            path,
            graded,
            total,
        } => wav_response(
            read_clip(path).await?,
            &presentation_id,
            Some((graded, total)),
        ),
    }
}

async fn reference(State(svc): State<Shared>, Path(id): Path<String>) -> HResult<Response> {
    let (presentation_id, path) = svc.reference(&id)?;
    wav_response(read_clip(path).await?, &presentation_id, None)
}

#[derive(Deserialize)]
struct SubmitGrade {
    presentation_id: String,
    odg: i64,
}

async fn grade(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    body: axum::body::Bytes,
) -> HResult<Json<GradeAck>> {
    let req: SubmitGrade = parse_body(&body)?;
    // the fsync happens inside; keep it off the async workers
    let ack =
        tokio::task::spawn_blocking(move || svc.submit_grade(&id, &req.presentation_id, req.odg))
            .await
            .map_err(|e| ServiceError::Internal(e.to_string()))??;
    Ok(Json(ack))
}

#[derive(Deserialize)]
struct ResultsQuery {
    group_by: Option<String>,
}

fn stats_json(s: &OdgStats) -> Value {
    json!({
        "counts": {"0": s.counts[0], "-1": s.counts[1], "-2": s.counts[2], "-3": s.counts[3], "-4": s.counts[4]},
        "n": s.n,
        "mean": s.mean,
        "std": s.std(),
        "std_population": s.std_population,
    })
}

/// Structured form of an aggregate table.
pub fn table_json(t: &OdgTable) -> Value {
    let rows: Vec<Value> = t
        .rows
        .iter()
        .map(|(k, s)| {
            let mut v = stats_json(s);
            v["model"] = json!(k.model);
            v["dataset"] = json!(k.dataset);
            v
        })
        .collect();
    let overall: Vec<Value> = t
        .overall
        .iter()
        .map(|(m, s)| {
            let mut v = stats_json(s);
            v["model"] = json!(m);
            v
        })
        .collect();
    json!({
        "empty": false,
        "group_by": t.grouping.name(),
        "rows": rows,
        "overall": overall,
        "text": t.render_text(),
    })
}

async fn results(State(svc): State<Shared>, Query(q): Query<ResultsQuery>) -> HResult<Json<Value>> {
    let group_by = q.group_by.unwrap_or_else(|| "model,dataset".into());
    Ok(Json(match svc.results(&group_by)? {
        Some(t) => table_json(&t),
        None => json!({"empty": true, "group_by": group_by, "rows": [], "overall": []}),
    }))
}
