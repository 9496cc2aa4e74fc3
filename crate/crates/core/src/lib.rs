//! Domain model for the prototype capture system.
//!
//! Everything in this crate is a plain value type or a pure function over
//! value types: capture records and their validation, the built-in coding
//! schemes, chronological ordering, and the prototype link graph.

pub mod capture;
pub mod graph;
pub mod ids;
pub mod order;
pub mod registry;
pub mod scheme;

pub use capture::{
    content_hash, validate_capture, Annotation, AnnotationPatch, CaptureRecord, ImageRef, IngestReceipt,
    ViewAngle, Views, Violation,
};
pub use graph::{reachability, GraphError, GraphViolation, Link, LinkGraph, NodeClass};
pub use ids::{BoothId, CaptureId, CardId, ProjectId, SchemeId, UserId};
pub use order::{canonical_order, sort_canonical, Chronology};
pub use registry::{Project, User};
pub use scheme::{assign_codes, builtin_schemes, CodeAssignment, CodingScheme, SchemeError};
