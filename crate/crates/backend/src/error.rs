use std::io;

use protobooth_core::{CardId, GraphError, SchemeError, UserId, Violation};

#[derive(Debug, thiserror::Error)]
pub enum RepoError {
    #[error("capture rejected: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("payload does not match manifest: {0}")]
    ManifestMismatch(String),
    #[error("{kind} not found: {id}")]
    NotFound { kind: &'static str, id: String },
    #[error("card {card} is already bound to user {user}")]
    CardConflict { card: CardId, user: UserId },
    #[error("user {0} already exists with a different name")]
    UserExists(UserId),
    #[error("invalid identifier {0:?}")]
    InvalidId(String),
    #[error("timestamp must be positive, got {0}")]
    NonpositiveTimestamp(i64),
    #[error("correcting the timestamp would reverse link {from} -> {to}")]
    CorrectionBreaksLink { from: String, to: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("storage failure ({context}): {source}")]
    Storage {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error("corrupt document {location}: {source}")]
    Corrupt {
        location: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("bad archive: {0}")]
    Archive(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl RepoError {
    /// Transient failures a client may retry.
    pub fn is_retriable(&self) -> bool {
        matches!(self, RepoError::Storage { .. })
    }

    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            RepoError::Invalid(_) => "invalid_capture",
            RepoError::ManifestMismatch(_) => "manifest_mismatch",
            RepoError::NotFound { .. } => "not_found",
            RepoError::CardConflict { .. } => "card_conflict",
            RepoError::UserExists(_) => "user_exists",
            RepoError::InvalidId(_) => "invalid_id",
            RepoError::NonpositiveTimestamp(_) => "timestamp_nonpositive",
            RepoError::CorrectionBreaksLink { .. } => "chronology",
            RepoError::Graph(GraphError::Chronology { .. }) => "chronology",
            RepoError::Graph(GraphError::NotMember(_)) => "not_member",
            RepoError::Graph(GraphError::DuplicateFinal { .. }) => "duplicate_final",
            RepoError::Graph(GraphError::Cycle) => "cycle",
            RepoError::Scheme(SchemeError::UnknownCategory { .. }) => "unknown_category",
            RepoError::Scheme(_) => "invalid_scheme",
            RepoError::Storage { .. } => "storage",
            RepoError::Corrupt { .. } => "corrupt",
            RepoError::Archive(_) => "bad_archive",
        }
    }

    pub(crate) fn storage(context: impl Into<String>) -> impl FnOnce(io::Error) -> RepoError {
        let context = context.into();
        move |source| RepoError::Storage { context, source }
    }

    pub(crate) fn not_found(kind: &'static str, id: impl ToString) -> RepoError {
        RepoError::NotFound {
            kind,
            id: id.to_string(),
        }
    }
}

pub type Result<T, E = RepoError> = std::result::Result<T, E>;
