use protobooth_core::{CaptureId, SchemeId};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("assignment for scheme {found} passed with scheme {expected}")]
    WrongScheme { expected: SchemeId, found: SchemeId },
    #[error("unknown category {category:?} in scheme {scheme}")]
    UnknownCategory { scheme: SchemeId, category: String },
    #[error("graph references unknown capture {0}")]
    UnknownCapture(CaptureId),
    #[error("edge {from} -> {to} does not point forward in time")]
    BackwardEdge { from: CaptureId, to: CaptureId },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("format {format} is not supported for {figure}")]
    UnsupportedFormat { figure: &'static str, format: String },
}
