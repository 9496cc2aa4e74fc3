//! Integrity scan over a repository.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use protobooth_core::{
    content_hash, validate_capture, CaptureId, CardId, GraphViolation, ProjectId, SchemeId,
    UserId, ViewAngle, Violation,
};
use serde::Serialize;

use crate::error::{RepoError, Result};
use crate::repo::Repository;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntegrityViolation {
    MissingBlob { capture_id: CaptureId, angle: ViewAngle, hash: String },
    CorruptBlob { hash: String },
    OrphanBlob { hash: String },
    InvalidCapture { capture_id: CaptureId, violations: Vec<Violation> },
    UnknownCapture { referenced_by: String, capture_id: CaptureId },
    UnknownUser { referenced_by: String, user_id: UserId },
    UnknownScheme { referenced_by: String, scheme_id: SchemeId },
    UnknownProject { referenced_by: String, project_id: ProjectId },
    InvalidCodes { capture_id: CaptureId, scheme_id: SchemeId, message: String },
    Graph { project_id: ProjectId, violation: GraphViolation },
    Audit { seq: u64, capture_id: CaptureId, message: String },
    CardOwners { card_id: CardId, users: Vec<UserId> },
}

impl fmt::Display for IntegrityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use IntegrityViolation::*;
        match self {
            MissingBlob { capture_id, angle, hash } => {
                write!(f, "missing blob {hash} for {capture_id}/{angle}")
            }
            CorruptBlob { hash } => write!(f, "blob {hash} does not match its hash"),
            OrphanBlob { hash } => write!(f, "orphan blob {hash}"),
            InvalidCapture { capture_id, violations } => {
                write!(f, "capture {capture_id} invalid:")?;
                for v in violations {
                    write!(f, " {v};")?;
                }
                Ok(())
            }
            UnknownCapture { referenced_by, capture_id } => {
                write!(f, "{referenced_by} refers to unknown capture {capture_id}")
            }
            UnknownUser { referenced_by, user_id } => {
                write!(f, "{referenced_by} refers to unknown user {user_id}")
            }
            UnknownScheme { referenced_by, scheme_id } => {
                write!(f, "{referenced_by} refers to unknown scheme {scheme_id}")
            }
            UnknownProject { referenced_by, project_id } => {
                write!(f, "{referenced_by} refers to unknown project {project_id}")
            }
            InvalidCodes { capture_id, scheme_id, message } => {
                write!(f, "codes {scheme_id}/{capture_id}: {message}")
            }
            Graph { project_id, violation } => write!(f, "graph {project_id}: {violation}"),
            Audit { seq, capture_id, message } => {
                write!(f, "audit entry {seq} ({capture_id}): {message}")
            }
            CardOwners { card_id, users } => {
                write!(f, "card {card_id} bound to several users: {users:?}")
            }
        }
    }
}

impl IntegrityViolation {
    pub fn kind(&self) -> &'static str {
        use IntegrityViolation::*;
        match self {
            MissingBlob { .. } => "missing_blob",
            CorruptBlob { .. } => "corrupt_blob",
            OrphanBlob { .. } => "orphan_blob",
            InvalidCapture { .. } => "invalid_capture",
            UnknownCapture { .. } => "unknown_capture",
            UnknownUser { .. } => "unknown_user",
            UnknownScheme { .. } => "unknown_scheme",
            UnknownProject { .. } => "unknown_project",
            InvalidCodes { .. } => "invalid_codes",
            Graph { .. } => "graph",
            Audit { .. } => "audit",
            CardOwners { .. } => "card_owners",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IntegrityReport {
    pub captures: usize,
    pub blobs: usize,
    pub violations: Vec<IntegrityViolation>,
}

impl IntegrityReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: &str) -> usize {
        self.violations.iter().filter(|v| v.kind() == kind).count()
    }
}

impl Repository {
    /// Scan blobs, references and invariants. Problems are reported, not
    /// raised; only an unreadable store is an error.
    pub fn verify(&self) -> Result<IntegrityReport> {
        use IntegrityViolation::*;
        let _w = self.lock_writer();
        let snap = self.snapshot();
        let mut out = Vec::new();

        let stored: BTreeSet<String> = self
            .storage()
            .list_blobs()
            .map_err(RepoError::storage("listing blobs"))?
            .into_iter()
            .collect();
        for hash in &stored {
            let bytes = self.blob(hash)?.unwrap_or_default();
            if content_hash(&bytes) != *hash {
                out.push(CorruptBlob { hash: hash.clone() });
            }
        }

        let mut referenced = BTreeSet::new();
        for r in snap.captures.values() {
            if let Err(violations) = validate_capture(r) {
                out.push(InvalidCapture { capture_id: r.capture_id.clone(), violations });
            }
            for (angle, image) in r.views.iter() {
                referenced.insert(image.content_hash.clone());
                if !stored.contains(&image.content_hash) {
                    out.push(MissingBlob {
                        capture_id: r.capture_id.clone(),
                        angle,
                        hash: image.content_hash.clone(),
                    });
                }
            }
        }
        for hash in stored.difference(&referenced) {
            out.push(OrphanBlob { hash: hash.clone() });
        }

        for p in snap.projects.values() {
            let by = format!("project {}", p.project_id);
            for m in p.members.iter().filter(|m| !snap.captures.contains_key(*m)) {
                out.push(UnknownCapture { referenced_by: by.clone(), capture_id: m.clone() });
            }
            for u in p.contributors.iter().filter(|u| !snap.users.contains_key(*u)) {
                out.push(UnknownUser { referenced_by: by.clone(), user_id: u.clone() });
            }
        }

        for ((scheme_id, capture_id), a) in &snap.assignments {
            let by = format!("codes {scheme_id}/{capture_id}");
            if !snap.captures.contains_key(capture_id) {
                out.push(UnknownCapture { referenced_by: by.clone(), capture_id: capture_id.clone() });
            }
            match snap.schemes.get(scheme_id) {
                None => out.push(UnknownScheme { referenced_by: by, scheme_id: scheme_id.clone() }),
                Some(scheme) => {
                    if let Err(e) = a.check(scheme) {
                        out.push(InvalidCodes {
                            capture_id: capture_id.clone(),
                            scheme_id: scheme_id.clone(),
                            message: e.to_string(),
                        });
                    }
                }
            }
        }

        for g in snap.graphs.values() {
            match snap.projects.get(&g.project_id) {
                None => out.push(UnknownProject {
                    referenced_by: "link graph".into(),
                    project_id: g.project_id.clone(),
                }),
                Some(p) => {
                    for violation in g.check(&snap.chronology(p)) {
                        out.push(Graph { project_id: g.project_id.clone(), violation });
                    }
                }
            }
        }

        // The audit log must chain: each correction starts where the previous
        // one for the same capture ended, and the last one matches the record.
        let mut last: BTreeMap<&CaptureId, i64> = BTreeMap::new();
        let mut prev_seq = 0;
        for c in &snap.audit {
            let audit = |message: String| Audit { seq: c.seq, capture_id: c.capture_id.clone(), message };
            if c.seq <= prev_seq {
                out.push(audit(format!("sequence not increasing after {prev_seq}")));
            }
            prev_seq = c.seq;
            if c.new_timestamp <= 0 {
                out.push(audit("nonpositive timestamp".into()));
            }
            if !snap.captures.contains_key(&c.capture_id) {
                out.push(UnknownCapture {
                    referenced_by: format!("audit entry {}", c.seq),
                    capture_id: c.capture_id.clone(),
                });
                continue;
            }
            if let Some(&before) = last.get(&c.capture_id) {
                if before != c.old_timestamp {
                    out.push(audit(format!(
                        "starts from {} but previous correction ended at {before}",
                        c.old_timestamp
                    )));
                }
            }
            last.insert(&c.capture_id, c.new_timestamp);
        }
        for (id, ts) in last {
            let current = snap.captures[id].timestamp;
            if current != ts {
                let seq = snap.audit.iter().rev().find(|c| c.capture_id == *id).map_or(0, |c| c.seq);
                out.push(Audit {
                    seq,
                    capture_id: id.clone(),
                    message: format!("record has timestamp {current}, audit log ends at {ts}"),
                });
            }
        }

        let mut owners: BTreeMap<&CardId, Vec<UserId>> = BTreeMap::new();
        for u in snap.users.values() {
            for c in &u.card_ids {
                owners.entry(c).or_default().push(u.user_id.clone());
            }
        }
        for (card, users) in owners {
            if users.len() > 1 {
                out.push(CardOwners { card_id: card.clone(), users });
            }
        }

        Ok(IntegrityReport {
            captures: snap.captures.len(),
            blobs: stored.len(),
            violations: out,
        })
    }
}
