//! JSON-over-HTTP API.
//!
//! Repository calls do file I/O and are run on the blocking pool. Errors
//! come back as `{"error": <code>, "message": ..., "violations": [...]}`.

use std::collections::BTreeMap;
use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use protobooth_analytics::{render, Format};
use protobooth_core::{
    AnnotationPatch, CaptureId, CaptureRecord, CardId, CodeAssignment, GraphError, Link,
    NodeClass, ProjectId, SchemeId, UserId, ViewAngle,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::archive::Archive;
use crate::error::RepoError;
use crate::figures::{compute_figure, FigureError, FigureKind, FigureRequest};
use crate::repo::{CaptureFilter, Capturer, Repository};

pub const MAX_UPLOAD_BYTES: usize = 512 * 1024 * 1024;

/// Error body shared by every endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiErrorBody {
    pub error: String,
    pub message: String,
    #[serde(default)]
    pub violations: Vec<serde_json::Value>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ApiErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ApiErrorBody {
                error: error.into(),
                message: message.into(),
                violations: Vec::new(),
            },
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl From<RepoError> for ApiError {
    fn from(e: RepoError) -> Self {
        let status = match &e {
            RepoError::Invalid(_)
            | RepoError::ManifestMismatch(_)
            | RepoError::NonpositiveTimestamp(_)
            | RepoError::Graph(_)
            | RepoError::Scheme(_) => StatusCode::UNPROCESSABLE_ENTITY,
            RepoError::NotFound { .. } => StatusCode::NOT_FOUND,
            RepoError::CardConflict { .. }
            | RepoError::UserExists(_)
            | RepoError::CorrectionBreaksLink { .. } => StatusCode::CONFLICT,
            RepoError::InvalidId(_) | RepoError::Archive(_) => StatusCode::BAD_REQUEST,
            RepoError::Storage { .. } => StatusCode::SERVICE_UNAVAILABLE,
            RepoError::Corrupt { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let violations = match &e {
            RepoError::Invalid(v) => v.iter().map(|v| json!(v)).collect(),
            RepoError::Graph(g) => vec![json!({ "code": graph_code(g), "message": g.to_string() })],
            RepoError::Scheme(s) => vec![json!({ "code": "scheme", "message": s.to_string() })],
            _ => Vec::new(),
        };
        if status.is_server_error() {
            tracing::error!(error = %e, "request failed");
        }
        Self {
            status,
            body: ApiErrorBody {
                error: e.code().into(),
                message: e.to_string(),
                violations,
            },
        }
    }
}

fn graph_code(e: &GraphError) -> &'static str {
    match e {
        GraphError::NotMember(_) => "not_member",
        GraphError::Chronology { .. } => "chronology",
        GraphError::DuplicateFinal { .. } => "duplicate_final",
        GraphError::Cycle => "cycle",
    }
}

impl From<FigureError> for ApiError {
    fn from(e: FigureError) -> Self {
        let status = match e {
            FigureError::UnknownProject(_) | FigureError::UnknownScheme(_) | FigureError::UnknownFigure(_) => {
                StatusCode::NOT_FOUND
            }
            _ => StatusCode::BAD_REQUEST,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Clone)]
struct AppState {
    repo: Arc<Repository>,
}

/// Run `f` against the repository on the blocking pool.
async fn blocking<T, F>(state: &AppState, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Repository) -> ApiResult<T> + Send + 'static,
{
    let repo = Arc::clone(&state.repo);
    tokio::task::spawn_blocking(move || f(&repo))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

/// Capture as served: the record plus the resolved capturer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureView {
    #[serde(flatten)]
    pub record: CaptureRecord,
    /// Display name, or `unknown card <id>`.
    pub capturer: String,
    pub capturer_user_id: Option<UserId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureDetail {
    #[serde(flatten)]
    pub view: CaptureView,
    pub projects: Vec<ProjectId>,
    pub codes: Vec<CodeAssignment>,
}

fn view_of(repo: &Repository, record: CaptureRecord) -> CaptureView {
    let capturer = repo.capturer(&record);
    let capturer_user_id = match &capturer {
        Capturer::User { user_id, .. } => Some(user_id.clone()),
        Capturer::UnknownCard(_) => None,
    };
    CaptureView {
        record,
        capturer: capturer.to_string(),
        capturer_user_id,
    }
}

pub fn router(repo: Arc<Repository>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/captures", post(ingest).get(list_captures))
        .route("/api/captures/{id}", get(get_capture).patch(annotate))
        .route("/api/captures/{id}/views/{angle}", get(view_image))
        .route("/api/captures/{id}/timestamp", post(correct_timestamp))
        .route("/api/captures/{id}/audit", get(audit))
        .route("/api/captures/{id}/codes", get(get_codes))
        .route("/api/captures/{id}/codes/{scheme}", put(put_codes))
        .route("/api/users", post(create_user).get(list_users))
        .route("/api/cards", post(register_card))
        .route("/api/projects", post(create_project).get(list_projects))
        .route("/api/projects/{id}", get(get_project))
        .route("/api/projects/{id}/contributors", post(add_contributor))
        .route("/api/projects/{id}/members", post(add_members))
        .route("/api/projects/{id}/links", get(get_links).put(put_links))
        .route("/api/schemes", get(list_schemes).post(create_scheme))
        .route("/api/export", get(export))
        .route("/api/import", post(import))
        .route("/api/verify", get(verify))
        .route("/api/analytics/{figure}", get(figure))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(AppState { repo })
}

/// Serve until `shutdown` resolves.
pub async fn serve(
    repo: Arc<Repository>,
    listener: tokio::net::TcpListener,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(repo))
        .with_graceful_shutdown(shutdown)
        .await
}

/// A server on its own runtime thread, for tests and embedding in
/// synchronous programs.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<std::io::Result<()>>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stop accepting, finish in-flight requests and join the thread.
    pub fn shutdown(mut self) -> std::io::Result<()> {
        self.stop_inner()
    }

    fn stop_inner(&mut self) -> std::io::Result<()> {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().unwrap_or_else(|_| Err(std::io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.stop_inner();
    }
}

pub fn spawn_server(repo: Arc<Repository>, addr: SocketAddr) -> std::io::Result<ServerHandle> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(4)
        .enable_all()
        .build()?;
    let std_listener = std::net::TcpListener::bind(addr)?;
    std_listener.set_nonblocking(true)?;
    let addr = std_listener.local_addr()?;
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(std_listener)?;
            serve(repo, listener, async {
                let _ = rx.await;
            })
            .await
        })
    });
    Ok(ServerHandle {
        addr,
        stop: Some(tx),
        thread: Some(thread),
    })
}

// -------------------------------------------------------------- handlers

async fn health(State(s): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "captures": s.repo.capture_count() }))
}

async fn ingest(State(s): State<AppState>, mut mp: Multipart) -> ApiResult<Response> {
    let mut manifest: Option<CaptureRecord> = None;
    let mut images: BTreeMap<ViewAngle, Vec<u8>> = BTreeMap::new();
    while let Some(field) = mp
        .next_field()
        .await
        .map_err(|e| ApiError::bad_request(format!("multipart: {e}")))?
    {
        let name = field.name().unwrap_or_default().to_owned();
        let data = field
            .bytes()
            .await
            .map_err(|e| ApiError::bad_request(format!("multipart field {name}: {e}")))?;
        if name == "manifest" {
            manifest = Some(
                serde_json::from_slice(&data)
                    .map_err(|e| ApiError::bad_request(format!("manifest: {e}")))?,
            );
        } else {
            let angle: ViewAngle = name
                .parse()
                .map_err(|_| ApiError::bad_request(format!("unexpected part {name:?}")))?;
            if images.insert(angle, data.to_vec()).is_some() {
                return Err(ApiError::bad_request(format!("image {angle} sent twice")));
            }
        }
    }
    let record = manifest.ok_or_else(|| ApiError::bad_request("missing manifest part"))?;
    let receipt = blocking(&s, move |r| Ok(r.ingest(&record, &images)?)).await?;
    let status = if receipt.created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(receipt)).into_response())
}

async fn list_captures(
    State(s): State<AppState>,
    Query(filter): Query<CaptureFilter>,
) -> ApiResult<Json<Vec<CaptureView>>> {
    blocking(&s, move |r| {
        Ok(Json(
            r.query_captures(&filter)
                .into_iter()
                .map(|c| view_of(r, c))
                .collect(),
        ))
    })
    .await
}

async fn get_capture(State(s): State<AppState>, Path(id): Path<CaptureId>) -> ApiResult<Json<CaptureDetail>> {
    blocking(&s, move |r| {
        let record = r.capture(&id)?;
        let snap = r.snapshot();
        Ok(Json(CaptureDetail {
            view: view_of(r, record),
            projects: snap.projects_of(&id).into_iter().cloned().collect(),
            codes: r.codes(&id),
        }))
    })
    .await
}

async fn view_image(
    State(s): State<AppState>,
    Path((id, angle)): Path<(CaptureId, String)>,
) -> ApiResult<Response> {
    let angle: ViewAngle = angle
        .parse()
        .map_err(|_| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no view {angle:?}")))?;
    let (bytes, media_type) = blocking(&s, move |r| Ok(r.view_image(&id, angle)?)).await?;
    let ct = HeaderValue::from_str(&media_type).unwrap_or(HeaderValue::from_static("application/octet-stream"));
    Ok(([(header::CONTENT_TYPE, ct)], bytes).into_response())
}

async fn annotate(
    State(s): State<AppState>,
    Path(id): Path<CaptureId>,
    Json(patch): Json<AnnotationPatch>,
) -> ApiResult<Json<CaptureView>> {
    blocking(&s, move |r| {
        let rec = r.annotate(&id, &patch)?;
        Ok(Json(view_of(r, rec)))
    })
    .await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimestampBody {
    pub timestamp: i64,
    #[serde(default)]
    pub note: String,
}

async fn correct_timestamp(
    State(s): State<AppState>,
    Path(id): Path<CaptureId>,
    Json(body): Json<TimestampBody>,
) -> ApiResult<Json<crate::repo::TimestampCorrection>> {
    blocking(&s, move |r| Ok(Json(r.correct_timestamp(&id, body.timestamp, body.note)?))).await
}

async fn audit(
    State(s): State<AppState>,
    Path(id): Path<CaptureId>,
) -> ApiResult<Json<Vec<crate::repo::TimestampCorrection>>> {
    blocking(&s, move |r| {
        r.capture(&id)?;
        Ok(Json(r.audit_log(Some(&id))))
    })
    .await
}

async fn get_codes(State(s): State<AppState>, Path(id): Path<CaptureId>) -> ApiResult<Json<Vec<CodeAssignment>>> {
    blocking(&s, move |r| {
        r.capture(&id)?;
        Ok(Json(r.codes(&id)))
    })
    .await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodesBody {
    pub categories: Vec<String>,
}

async fn put_codes(
    State(s): State<AppState>,
    Path((id, scheme)): Path<(CaptureId, SchemeId)>,
    Json(body): Json<CodesBody>,
) -> ApiResult<Json<CodeAssignment>> {
    blocking(&s, move |r| Ok(Json(r.set_codes(&id, &scheme, &body.categories)?))).await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewUser {
    pub user_id: UserId,
    pub display_name: String,
}

async fn create_user(State(s): State<AppState>, Json(body): Json<NewUser>) -> ApiResult<Response> {
    let user = blocking(&s, move |r| Ok(r.create_user(body.user_id, body.display_name)?)).await?;
    Ok((StatusCode::CREATED, Json(user)).into_response())
}

async fn list_users(State(s): State<AppState>) -> Json<Vec<protobooth_core::User>> {
    Json(s.repo.users())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CardBinding {
    pub card_id: CardId,
    pub user_id: UserId,
}

async fn register_card(
    State(s): State<AppState>,
    Json(body): Json<CardBinding>,
) -> ApiResult<Json<protobooth_core::User>> {
    blocking(&s, move |r| Ok(Json(r.register_card(body.card_id, &body.user_id)?))).await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewProject {
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub creator: UserId,
}

async fn create_project(State(s): State<AppState>, Json(body): Json<NewProject>) -> ApiResult<Response> {
    let p = blocking(&s, move |r| Ok(r.create_project(body.title, body.description, &body.creator)?)).await?;
    Ok((StatusCode::CREATED, Json(p)).into_response())
}

async fn list_projects(State(s): State<AppState>) -> Json<Vec<protobooth_core::Project>> {
    Json(s.repo.projects())
}

async fn get_project(
    State(s): State<AppState>,
    Path(id): Path<ProjectId>,
) -> ApiResult<Json<protobooth_core::Project>> {
    Ok(Json(s.repo.project(&id)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContributorBody {
    pub user_id: UserId,
}

async fn add_contributor(
    State(s): State<AppState>,
    Path(id): Path<ProjectId>,
    Json(body): Json<ContributorBody>,
) -> ApiResult<Json<protobooth_core::Project>> {
    blocking(&s, move |r| Ok(Json(r.add_contributor(&id, &body.user_id)?))).await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MembersBody {
    pub capture_ids: Vec<CaptureId>,
}

async fn add_members(
    State(s): State<AppState>,
    Path(id): Path<ProjectId>,
    Json(body): Json<MembersBody>,
) -> ApiResult<Json<protobooth_core::Project>> {
    blocking(&s, move |r| Ok(Json(r.assign_to_project(&id, &body.capture_ids)?))).await
}

async fn get_links(
    State(s): State<AppState>,
    Path(id): Path<ProjectId>,
) -> ApiResult<Json<protobooth_core::LinkGraph>> {
    Ok(Json(s.repo.links(&id)?))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LinksBody {
    #[serde(default)]
    pub node_classes: BTreeMap<CaptureId, NodeClass>,
    #[serde(default)]
    pub edges: Vec<Link>,
}

async fn put_links(
    State(s): State<AppState>,
    Path(id): Path<ProjectId>,
    Json(body): Json<LinksBody>,
) -> ApiResult<Json<protobooth_core::LinkGraph>> {
    blocking(&s, move |r| Ok(Json(r.put_links(&id, body.node_classes, body.edges)?))).await
}

async fn list_schemes(State(s): State<AppState>) -> Json<Vec<protobooth_core::CodingScheme>> {
    Json(s.repo.schemes())
}

async fn create_scheme(
    State(s): State<AppState>,
    Json(body): Json<protobooth_core::CodingScheme>,
) -> ApiResult<Response> {
    let scheme = blocking(&s, move |r| Ok(r.create_scheme(body)?)).await?;
    Ok((StatusCode::CREATED, Json(scheme)).into_response())
}

#[derive(Debug, Clone, Default, Deserialize)]
struct ExportQuery {
    project: Option<ProjectId>,
}

async fn export(State(s): State<AppState>, Query(q): Query<ExportQuery>) -> ApiResult<Response> {
    let tar = blocking(&s, move |r| Ok(r.export_raw(q.project.as_ref())?.to_tar())).await?;
    Ok((
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("application/x-tar")),
            (
                header::CONTENT_DISPOSITION,
                HeaderValue::from_static("attachment; filename=\"protobooth-export.tar\""),
            ),
        ],
        tar,
    )
        .into_response())
}

async fn import(State(s): State<AppState>, body: Bytes) -> ApiResult<Json<crate::archive::ImportReport>> {
    blocking(&s, move |r| {
        let archive = Archive::from_tar(body.as_ref())?;
        Ok(Json(r.import_archive(&archive)?))
    })
    .await
}

async fn verify(State(s): State<AppState>) -> ApiResult<Json<crate::verify::IntegrityReport>> {
    blocking(&s, |r| Ok(Json(r.verify()?))).await
}

// Query strings cannot carry flattened numeric fields, so every knob is
// listed here and merged onto the defaults.
#[derive(Debug, Clone, Default, Deserialize)]
struct FigureQuery {
    project: Option<ProjectId>,
    scheme: Option<SchemeId>,
    seed: Option<u64>,
    tz: Option<String>,
    mode: Option<protobooth_analytics::CumulativeMode>,
    window: Option<i64>,
    threshold: Option<usize>,
    format: Option<String>,
}

impl FigureQuery {
    fn request(&self) -> FigureRequest {
        let d = FigureRequest::default();
        FigureRequest {
            project: self.project.clone(),
            scheme: self.scheme.clone(),
            seed: self.seed.unwrap_or(d.seed),
            tz: self.tz.clone().unwrap_or(d.tz),
            mode: self.mode.unwrap_or(d.mode),
            window: self.window.unwrap_or(d.window),
            threshold: self.threshold.unwrap_or(d.threshold),
        }
    }
}

async fn figure(
    State(s): State<AppState>,
    Path(kind): Path<String>,
    Query(q): Query<FigureQuery>,
) -> ApiResult<Response> {
    let kind: FigureKind = kind.parse()?;
    let format: Format = q
        .format
        .as_deref()
        .unwrap_or("json")
        .parse()
        .map_err(|e: protobooth_analytics::AnalyticsError| ApiError::bad_request(e.to_string()))?;
    let req = q.request();
    let bytes = blocking(&s, move |r| {
        let fig = compute_figure(&r.snapshot(), kind, &req)?;
        render(&fig, format).map_err(|e| ApiError::bad_request(e.to_string()))
    })
    .await?;
    let ct = match format {
        Format::Svg => "image/svg+xml",
        Format::Csv => "text/csv",
        Format::Json => "application/json",
    };
    Ok(([(header::CONTENT_TYPE, HeaderValue::from_static(ct))], bytes).into_response())
}
