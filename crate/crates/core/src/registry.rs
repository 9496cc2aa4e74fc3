use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ids::{CaptureId, CardId, ProjectId, UserId};

/// A person who captures or curates prototypes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub user_id: UserId,
    pub display_name: String,
    #[serde(default)]
    pub card_ids: BTreeSet<CardId>,
}

/// A titled collection of captures with one or more contributors.
///
/// A capture may belong to several projects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    pub project_id: ProjectId,
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub contributors: BTreeSet<UserId>,
    #[serde(default)]
    pub members: BTreeSet<CaptureId>,
}
