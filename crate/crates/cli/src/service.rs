// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

//! JSON-over-HTTP editing sessions.
//!
//! Each document has a single writer: edits queue on a fair async mutex and
//! run one at a time on the blocking pool, in arrival order. Reads never
//! wait for an edit; they see the last published revision.
//!
//! Edit requests may carry the revision they were made against. A request
//! citing anything but the current revision is rejected with 409.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use pkcurve::builder::{changed_indices, EditReport};
use pkcurve::io::{CurveFile, SegmentEntry};
use pkcurve::metrics::{comb_geometry, CombGeometry};
use pkcurve::{ContinuityMode, CurveDocument, DocumentSettings, EnergyWeights, Error, Point2, SolverSettings};

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub reason: String,
}

impl ApiError {
    fn new(status: StatusCode, reason: impl Into<String>) -> Self {
        ApiError {
            status,
            reason: reason.into(),
        }
    }

    fn not_found(id: u64) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, format!("no document {id}"))
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = if e.is_degenerate_input() || e.is_malformed() {
            StatusCode::UNPROCESSABLE_ENTITY
        } else {
            StatusCode::INTERNAL_SERVER_ERROR
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.reason }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Body of `POST /doc`.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    #[serde(default)]
    pub continuity: Option<ContinuityMode>,
    #[serde(default)]
    pub weights: Option<EnergyWeights>,
    #[serde(default)]
    pub solver: Option<SolverSettings>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct Created {
    pub id: u64,
    pub revision: u64,
}

/// Body of `POST /doc/{id}/point`: either a bare `[x, y]` or an object
/// that also names the revision it was made against.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum InsertRequest {
    Bare(Point2),
    Full {
        point: Point2,
        #[serde(default)]
        revision: Option<u64>,
    },
}

#[derive(Clone, Debug, Deserialize)]
pub struct MoveRequest {
    pub index: usize,
    pub point: Point2,
    #[serde(default)]
    pub revision: Option<u64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
pub struct RevisionRequest {
    #[serde(default)]
    pub revision: Option<u64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct IndexedSegment {
    pub index: usize,
    #[serde(flatten)]
    pub segment: SegmentEntry,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct DeltaReport {
    /// Solver details of the edit; absent for undo and redo.
    pub edit: Option<EditReport>,
    pub average_ep: f64,
    pub max_ep: f64,
}

/// Response to every edit.
#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct Delta {
    pub revision: u64,
    pub point_count: usize,
    pub segment_count: usize,
    pub closed: bool,
    /// Segments whose bytes differ from the previous revision.
    pub changed_segment_indices: Vec<usize>,
    pub segments: Vec<IndexedSegment>,
    pub report: DeltaReport,
}

#[derive(Clone, Copy, Debug, Deserialize)]
pub struct CombQuery {
    #[serde(default = "default_comb_scale")]
    pub scale: f64,
    #[serde(default = "default_comb_samples")]
    pub samples: usize,
}

fn default_comb_scale() -> f64 {
    1.0
}

fn default_comb_samples() -> usize {
    64
}

/// What readers see.
struct Published {
    document: CurveDocument,
    curve: CurveFile,
}

struct Session {
    id: u64,
    /// Held for the whole of an edit; tokio's mutex is FIFO.
    writer: Mutex<()>,
    latest: RwLock<Arc<Published>>,
}

impl Session {
    fn latest(&self) -> Arc<Published> {
        self.latest.read().expect("poisoned").clone()
    }
}

#[derive(Default)]
pub struct AppState {
    docs: RwLock<HashMap<u64, Arc<Session>>>,
    next_id: AtomicU64,
    snapshot_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(snapshot_dir: Option<PathBuf>) -> Self {
        AppState {
            docs: RwLock::default(),
            next_id: AtomicU64::new(1),
            snapshot_dir,
        }
    }

    fn session(&self, id: u64) -> Result<Arc<Session>, ApiError> {
        self.docs
            .read()
            .expect("poisoned")
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    fn write_snapshot(&self, id: u64, curve: &CurveFile, revision: u64) -> Result<(), Error> {
        if let Some(dir) = &self.snapshot_dir {
            std::fs::create_dir_all(dir)?;
            curve.write(dir.join(format!("doc-{id}-rev-{revision:06}.json")))?;
        }
        Ok(())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/doc", post(create))
        .route("/doc/{id}", get(fetch))
        .route("/doc/{id}/comb", get(comb))
        .route("/doc/{id}/point", post(insert))
        .route("/doc/{id}/move", post(move_point))
        .route("/doc/{id}/close", post(close))
        .route("/doc/{id}/undo", post(undo))
        .route("/doc/{id}/redo", post(redo))
        .with_state(state)
}

async fn create(State(state): State<Arc<AppState>>, body: Option<Json<CreateRequest>>) -> ApiResult<Created> {
    let req = body.map(|Json(b)| b).unwrap_or_default();
    let mut settings = DocumentSettings::new(req.continuity.unwrap_or(ContinuityMode::C2));
    if let Some(w) = req.weights {
        settings.weights = w;
    }
    if let Some(s) = req.solver {
        settings.solver = s;
    }
    let document = CurveDocument::with_settings(settings)?;
    let curve = CurveFile::from_document(&document)?;
    let id = state.next_id.fetch_add(1, Ordering::Relaxed);
    let revision = document.revision();
    state.write_snapshot(id, &curve, revision)?;
    let session = Session {
        id,
        writer: Mutex::new(()),
        latest: RwLock::new(Arc::new(Published { document, curve })),
    };
    state.docs.write().expect("poisoned").insert(id, Arc::new(session));
    tracing::info!(id, "created document");
    Ok(Json(Created { id, revision }))
}

async fn fetch(State(state): State<Arc<AppState>>, Path(id): Path<u64>) -> ApiResult<CurveFile> {
    Ok(Json(state.session(id)?.latest().curve.clone()))
}

async fn comb(
    State(state): State<Arc<AppState>>,
    Path(id): Path<u64>,
    Query(q): Query<CombQuery>,
) -> ApiResult<CombGeometry> {
    if !(q.scale.is_finite() && q.scale > 0.0) || q.samples < 2 {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "comb needs scale > 0 and samples >= 2",
        ));
    }
    let latest = state.session(id)?.latest();
    let geometry = tokio::task::spawn_blocking(move || comb_geometry(&latest.document, q.samples, q.scale))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(geometry))
}

/// Outcome of an edit closure: `None` when there was nothing to do.
type EditFn = Box<dyn FnOnce(&mut CurveDocument) -> Result<Option<EditReport>, ApiError> + Send>;

/// Applies `op` to a copy of the document, then publishes it.
async fn edit(state: Arc<AppState>, id: u64, revision: Option<u64>, op: EditFn) -> ApiResult<Delta> {
    let session = state.session(id)?;
    let _writer = session.writer.lock().await;
    let before = session.latest();
    if let Some(r) = revision {
        if r != before.document.revision() {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                format!("stale revision {r}, current is {}", before.document.revision()),
            ));
        }
    }
    let task_state = state.clone();
    let task_session = session.clone();
    let (published, delta) = tokio::task::spawn_blocking(move || -> Result<_, ApiError> {
        let mut document = before.document.clone();
        let report = op(&mut document)?;
        let curve = CurveFile::from_document(&document)?;
        let revision = document.revision();
        task_state.write_snapshot(task_session.id, &curve, revision)?;
        let changed = changed_indices(before.document.segments(), document.segments());
        let delta = Delta {
            revision,
            point_count: document.points().len(),
            segment_count: document.segments().len(),
            closed: document.is_closed(),
            segments: changed
                .iter()
                .map(|&index| IndexedSegment {
                    index,
                    segment: curve.segments[index].clone(),
                })
                .collect(),
            changed_segment_indices: changed,
            report: DeltaReport {
                edit: report,
                average_ep: curve.energy_report.average_ep,
                max_ep: curve.energy_report.max_ep,
            },
        };
        Ok((Published { document, curve }, delta))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    *session.latest.write().expect("poisoned") = Arc::new(published);
    tracing::debug!(id, revision = delta.revision, changed = ?delta.changed_segment_indices, "edit");
    Ok(Json(delta))
}

async fn insert(State(state): State<Arc<AppState>>, Path(id): Path<u64>, Json(req): Json<InsertRequest>) -> ApiResult<Delta> {
    let (point, revision) = match req {
        InsertRequest::Bare(p) => (p, None),
        InsertRequest::Full { point, revision } => (point, revision),
    };
    edit(state, id, revision, Box::new(move |d| Ok(Some(d.insert_point(point)?)))).await
}

async fn move_point(State(state): State<Arc<AppState>>, Path(id): Path<u64>, Json(req): Json<MoveRequest>) -> ApiResult<Delta> {
    let (index, point) = (req.index, req.point);
    edit(state, id, req.revision, Box::new(move |d| Ok(Some(d.move_point(index, point)?)))).await
}

async fn close(
    State(state): State<Arc<AppState>>,
    Path(id): Path<u64>,
    body: Option<Json<RevisionRequest>>,
) -> ApiResult<Delta> {
    let revision = body.and_then(|Json(b)| b.revision);
    edit(state, id, revision, Box::new(|d| Ok(Some(d.close()?)))).await
}

fn nothing_to(what: &str) -> ApiError {
    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("nothing to {what}"))
}

async fn undo(
    State(state): State<Arc<AppState>>,
    Path(id): Path<u64>,
    body: Option<Json<RevisionRequest>>,
) -> ApiResult<Delta> {
    let revision = body.and_then(|Json(b)| b.revision);
    let op: EditFn = Box::new(|d| d.undo().map(|_| None).ok_or_else(|| nothing_to("undo")));
    edit(state, id, revision, op).await
}

async fn redo(
    State(state): State<Arc<AppState>>,
    Path(id): Path<u64>,
    body: Option<Json<RevisionRequest>>,
) -> ApiResult<Delta> {
    let revision = body.and_then(|Json(b)| b.revision);
    let op: EditFn = Box::new(|d| d.redo().map(|_| None).ok_or_else(|| nothing_to("redo")));
    edit(state, id, revision, op).await
}

/// Serves until ctrl-c.
pub async fn serve(bind: &str, snapshot_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    let app = router(Arc::new(AppState::new(snapshot_dir)));
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
