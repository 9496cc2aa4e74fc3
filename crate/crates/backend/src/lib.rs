//! Storage and service side of the capture system.

pub mod archive;
pub mod client;
pub mod error;
pub mod figures;
pub mod fixture;
pub mod http;
pub mod repo;
pub mod sample;
pub mod storage;
pub mod verify;

pub use archive::{Archive, ImportReport, Manifest};
pub use client::{ApiClient, ClientError, HttpUplink, LocalUplink, RemoteReport};
pub use error::{RepoError, Result};
pub use repo::{CaptureFilter, Capturer, RepoContents, RepoSnapshot, Repository, TimestampCorrection};
pub use storage::{FsStorage, MemStorage, Storage};
pub use verify::{IntegrityReport, IntegrityViolation};
pub use figures::{compute_figure, FigureError, FigureKind, FigureRequest};
pub use fixture::load_case_fixture;
pub use http::{router, serve, spawn_server, ServerHandle};
