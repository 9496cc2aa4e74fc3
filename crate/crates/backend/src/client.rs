//! Blocking HTTP client for the API, and the booth uplinks built on it.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use protobooth_core::{
    AnnotationPatch, CaptureId, CaptureRecord, CardId, CodeAssignment, IngestReceipt, LinkGraph,
    Project, ProjectId, SchemeId, User, UserId, ViewAngle,
};
use protobooth_node::{Uplink, UplinkError};
use reqwest::blocking::{multipart, Client, RequestBuilder, Response};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::archive::{Archive, ImportReport};
use crate::error::RepoError;
use crate::http::{ApiErrorBody, CaptureDetail, CaptureView, LinksBody};
use crate::repo::{CaptureFilter, Repository, TimestampCorrection};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("server unreachable: {0}")]
    Unreachable(String),
    #[error("server answered {status}: {}", .body.message)]
    Api { status: u16, body: ApiErrorBody },
    #[error("unexpected response: {0}")]
    Decode(String),
}

impl ClientError {
    pub fn status(&self) -> Option<u16> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            _ => None,
        }
    }

    /// Error code from the body, e.g. `card_conflict`.
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Api { body, .. } => Some(&body.error),
            _ => None,
        }
    }
}

/// Integrity report as seen over the wire. Violations stay as JSON objects
/// tagged with `kind`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RemoteReport {
    pub captures: usize,
    pub blobs: usize,
    pub violations: Vec<serde_json::Value>,
}

impl RemoteReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: &str) -> usize {
        self.violations
            .iter()
            .filter(|v| v.get("kind").and_then(|k| k.as_str()) == Some(kind))
            .count()
    }
}

#[derive(Debug, Clone)]
pub struct ApiClient {
    base: String,
    http: Client,
}

impl ApiClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        let http = Client::builder()
            .connect_timeout(Duration::from_secs(5))
            .timeout(Duration::from_secs(120))
            .build()
            .expect("http client configuration");
        Self {
            base: base_url.into().trim_end_matches('/').to_owned(),
            http,
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn send(&self, req: RequestBuilder) -> Result<Response, ClientError> {
        let resp = req.send().map_err(|e| ClientError::Unreachable(e.to_string()))?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.text().unwrap_or_default();
        let body = serde_json::from_str(&text).unwrap_or(ApiErrorBody {
            error: "http".into(),
            message: text,
            violations: Vec::new(),
        });
        Err(ClientError::Api { status: status.as_u16(), body })
    }

    fn json<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T, ClientError> {
        self.send(req)?
            .json()
            .map_err(|e| ClientError::Decode(e.to_string()))
    }

    fn bytes(&self, req: RequestBuilder) -> Result<Vec<u8>, ClientError> {
        self.send(req)?
            .bytes()
            .map(|b| b.to_vec())
            .map_err(|e| ClientError::Decode(e.to_string()))
    }

    fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ClientError> {
        self.json(self.http.post(self.url(path)).json(body))
    }

    pub fn health(&self) -> Result<serde_json::Value, ClientError> {
        self.json(self.http.get(self.url("/api/health")))
    }

    pub fn ingest(
        &self,
        record: &CaptureRecord,
        images: &BTreeMap<ViewAngle, Vec<u8>>,
    ) -> Result<IngestReceipt, ClientError> {
        let manifest = serde_json::to_string(record).expect("record serialises");
        let mut form = multipart::Form::new().part(
            "manifest",
            multipart::Part::text(manifest)
                .mime_str("application/json")
                .expect("static mime"),
        );
        for (angle, bytes) in images {
            let media = record
                .views
                .get(*angle)
                .map_or("application/octet-stream", |i| i.media_type.as_str());
            let ext = protobooth_core::capture::extension_for(media);
            let part = multipart::Part::bytes(bytes.clone())
                .file_name(format!("{angle}.{ext}"))
                .mime_str(media)
                .unwrap_or_else(|_| multipart::Part::bytes(bytes.clone()));
            form = form.part(angle.as_str(), part);
        }
        self.json(self.http.post(self.url("/api/captures")).multipart(form))
    }

    pub fn captures(&self, filter: &CaptureFilter) -> Result<Vec<CaptureView>, ClientError> {
        self.json(self.http.get(self.url("/api/captures")).query(filter))
    }

    pub fn capture(&self, id: &CaptureId) -> Result<CaptureDetail, ClientError> {
        self.json(self.http.get(self.url(&format!("/api/captures/{id}"))))
    }

    pub fn view_image(&self, id: &CaptureId, angle: ViewAngle) -> Result<Vec<u8>, ClientError> {
        self.bytes(self.http.get(self.url(&format!("/api/captures/{id}/views/{angle}"))))
    }

    pub fn annotate(&self, id: &CaptureId, patch: &AnnotationPatch) -> Result<CaptureView, ClientError> {
        self.json(self.http.patch(self.url(&format!("/api/captures/{id}"))).json(patch))
    }

    pub fn correct_timestamp(
        &self,
        id: &CaptureId,
        timestamp: i64,
        note: &str,
    ) -> Result<TimestampCorrection, ClientError> {
        self.post(
            &format!("/api/captures/{id}/timestamp"),
            &json!({ "timestamp": timestamp, "note": note }),
        )
    }

    pub fn audit(&self, id: &CaptureId) -> Result<Vec<TimestampCorrection>, ClientError> {
        self.json(self.http.get(self.url(&format!("/api/captures/{id}/audit"))))
    }

    pub fn set_codes(
        &self,
        id: &CaptureId,
        scheme: &SchemeId,
        categories: &[&str],
    ) -> Result<CodeAssignment, ClientError> {
        self.json(
            self.http
                .put(self.url(&format!("/api/captures/{id}/codes/{scheme}")))
                .json(&json!({ "categories": categories })),
        )
    }

    pub fn create_user(&self, user_id: &UserId, display_name: &str) -> Result<User, ClientError> {
        self.post("/api/users", &json!({ "user_id": user_id, "display_name": display_name }))
    }

    pub fn register_card(&self, card_id: &CardId, user_id: &UserId) -> Result<User, ClientError> {
        self.post("/api/cards", &json!({ "card_id": card_id, "user_id": user_id }))
    }

    pub fn create_project(&self, title: &str, description: &str, creator: &UserId) -> Result<Project, ClientError> {
        self.post(
            "/api/projects",
            &json!({ "title": title, "description": description, "creator": creator }),
        )
    }

    pub fn projects(&self) -> Result<Vec<Project>, ClientError> {
        self.json(self.http.get(self.url("/api/projects")))
    }

    pub fn add_contributor(&self, project: &ProjectId, user_id: &UserId) -> Result<Project, ClientError> {
        self.post(
            &format!("/api/projects/{project}/contributors"),
            &json!({ "user_id": user_id }),
        )
    }

    pub fn add_members(&self, project: &ProjectId, ids: &[CaptureId]) -> Result<Project, ClientError> {
        self.post(
            &format!("/api/projects/{project}/members"),
            &json!({ "capture_ids": ids }),
        )
    }

    pub fn links(&self, project: &ProjectId) -> Result<LinkGraph, ClientError> {
        self.json(self.http.get(self.url(&format!("/api/projects/{project}/links"))))
    }

    pub fn put_links(&self, project: &ProjectId, body: &LinksBody) -> Result<LinkGraph, ClientError> {
        self.json(
            self.http
                .put(self.url(&format!("/api/projects/{project}/links")))
                .json(body),
        )
    }

    pub fn export(&self, project: Option<&ProjectId>) -> Result<Archive, ClientError> {
        let mut req = self.http.get(self.url("/api/export"));
        if let Some(p) = project {
            req = req.query(&[("project", p.as_str())]);
        }
        let tar = self.bytes(req)?;
        Archive::from_tar(tar.as_slice()).map_err(|e| ClientError::Decode(e.to_string()))
    }

    pub fn import(&self, archive: &Archive) -> Result<ImportReport, ClientError> {
        self.json(
            self.http
                .post(self.url("/api/import"))
                .header(reqwest::header::CONTENT_TYPE, "application/x-tar")
                .body(archive.to_tar()),
        )
    }

    pub fn verify(&self) -> Result<RemoteReport, ClientError> {
        self.json(self.http.get(self.url("/api/verify")))
    }

    /// Rendered figure bytes. `params` are passed as query parameters.
    pub fn figure(&self, figure: &str, params: &[(&str, String)]) -> Result<Vec<u8>, ClientError> {
        self.bytes(
            self.http
                .get(self.url(&format!("/api/analytics/{figure}")))
                .query(params),
        )
    }
}

/// Booth uplink over HTTP. Transport failures and server errors are worth
/// retrying; 4xx answers are not.
#[derive(Debug, Clone)]
pub struct HttpUplink {
    client: ApiClient,
}

impl HttpUplink {
    pub fn new(client: ApiClient) -> Self {
        Self { client }
    }
}

impl Uplink for HttpUplink {
    fn deliver(
        &mut self,
        record: &CaptureRecord,
        images: &BTreeMap<ViewAngle, Vec<u8>>,
    ) -> Result<IngestReceipt, UplinkError> {
        match self.client.ingest(record, images) {
            Ok(r) => Ok(r),
            Err(ClientError::Api { status, body }) if status < 500 => Err(UplinkError::Rejected {
                status,
                message: body.message,
            }),
            Err(e) => Err(UplinkError::Unreachable(e.to_string())),
        }
    }
}

/// Uplink straight into an in-process repository.
#[derive(Debug, Clone)]
pub struct LocalUplink {
    repo: Arc<Repository>,
}

impl LocalUplink {
    pub fn new(repo: Arc<Repository>) -> Self {
        Self { repo }
    }
}

impl Uplink for LocalUplink {
    fn deliver(
        &mut self,
        record: &CaptureRecord,
        images: &BTreeMap<ViewAngle, Vec<u8>>,
    ) -> Result<IngestReceipt, UplinkError> {
        self.repo.ingest(record, images).map_err(|e| match e {
            RepoError::Storage { .. } => UplinkError::Unreachable(e.to_string()),
            other => UplinkError::Rejected {
                status: 422,
                message: other.to_string(),
            },
        })
    }
}
