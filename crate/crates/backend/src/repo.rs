//! The capture repository: metadata documents plus content-addressed images.
//!
//! All state lives in a [`Storage`]; an in-memory copy serves reads. Writers
//! are serialised by a single mutex and persist to storage before the
//! in-memory copy is updated, so readers never see an entity that is not
//! durable. Ingest writes the seven blobs first and the capture document
//! last; a capture becomes visible only once both are in place.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use protobooth_core::{
    assign_codes, builtin_schemes, canonical_order, validate_capture, AnnotationPatch, BoothId,
    CaptureId, CaptureRecord, CardId, Chronology, CodeAssignment, CodingScheme, IngestReceipt,
    Link, LinkGraph, NodeClass, Project, ProjectId, SchemeId, User, UserId, ViewAngle,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{RepoError, Result};
use crate::storage::{FsStorage, Storage};

pub(crate) const CAPTURES: &str = "captures";
pub(crate) const USERS: &str = "users";
pub(crate) const PROJECTS: &str = "projects";
pub(crate) const SCHEMES: &str = "schemes";
pub(crate) const GRAPHS: &str = "graphs";
pub(crate) const AUDIT: &str = "audit";

pub(crate) fn codes_collection(scheme: &SchemeId) -> String {
    format!("codes/{scheme}")
}

/// Canonical document encoding: pretty JSON with a trailing newline.
pub(crate) fn encode<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("documents serialise");
    v.push(b'\n');
    v
}

pub(crate) fn decode<T: DeserializeOwned>(location: &str, bytes: &[u8]) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|source| RepoError::Corrupt {
        location: location.to_owned(),
        source,
    })
}

/// Manual change of a capture's timestamp, kept forever.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimestampCorrection {
    pub seq: u64,
    pub capture_id: CaptureId,
    pub old_timestamp: i64,
    pub new_timestamp: i64,
    pub note: String,
    /// UNIX seconds when the correction was made.
    pub corrected_at: i64,
}

/// Who made a capture, resolved through the card registry at query time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Capturer {
    User { user_id: UserId, display_name: String },
    UnknownCard(CardId),
}

impl std::fmt::Display for Capturer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Capturer::User { display_name, .. } => f.write_str(display_name),
            Capturer::UnknownCard(card) => write!(f, "unknown card {card}"),
        }
    }
}

/// Conjunctive capture filter. `from`/`to` are inclusive UNIX seconds.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureFilter {
    #[serde(default)]
    pub user: Option<UserId>,
    #[serde(default)]
    pub booth: Option<BoothId>,
    #[serde(default)]
    pub project: Option<ProjectId>,
    #[serde(default)]
    pub from: Option<i64>,
    #[serde(default)]
    pub to: Option<i64>,
}

/// Point-in-time copy of all metadata.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RepoSnapshot {
    pub captures: BTreeMap<CaptureId, CaptureRecord>,
    pub users: BTreeMap<UserId, User>,
    pub projects: BTreeMap<ProjectId, Project>,
    pub schemes: BTreeMap<SchemeId, CodingScheme>,
    pub assignments: BTreeMap<(SchemeId, CaptureId), CodeAssignment>,
    pub graphs: BTreeMap<ProjectId, LinkGraph>,
    pub audit: Vec<TimestampCorrection>,
}

impl RepoSnapshot {
    pub fn card_owner(&self, card: &CardId) -> Option<&User> {
        self.users.values().find(|u| u.card_ids.contains(card))
    }

    pub fn capturer(&self, record: &CaptureRecord) -> Capturer {
        match self.card_owner(&record.card_id) {
            Some(u) => Capturer::User {
                user_id: u.user_id.clone(),
                display_name: u.display_name.clone(),
            },
            None => Capturer::UnknownCard(record.card_id.clone()),
        }
    }

    /// Captures matching `filter`, in canonical order.
    pub fn query(&self, filter: &CaptureFilter) -> Vec<CaptureRecord> {
        let project_members = match &filter.project {
            Some(p) => match self.projects.get(p) {
                Some(p) => Some(&p.members),
                None => return Vec::new(),
            },
            None => None,
        };
        let user_cards = filter
            .user
            .as_ref()
            .map(|u| self.users.get(u).map(|u| u.card_ids.clone()).unwrap_or_default());
        let hits = self.captures.values().filter(|r| {
            project_members.is_none_or(|m| m.contains(&r.capture_id))
                && user_cards.as_ref().is_none_or(|c| c.contains(&r.card_id))
                && filter.booth.as_ref().is_none_or(|b| *b == r.booth_id)
                && filter.from.is_none_or(|t| r.timestamp >= t)
                && filter.to.is_none_or(|t| r.timestamp <= t)
        });
        canonical_order(hits).into_iter().cloned().collect()
    }

    pub fn project_captures(&self, project: &ProjectId) -> Vec<CaptureRecord> {
        self.query(&CaptureFilter {
            project: Some(project.clone()),
            ..Default::default()
        })
    }

    pub fn assignments_for(&self, scheme: &SchemeId) -> Vec<CodeAssignment> {
        self.assignments
            .iter()
            .filter(|((s, _), _)| s == scheme)
            .map(|(_, a)| a.clone())
            .collect()
    }

    /// Projects containing `capture`, by id.
    pub fn projects_of(&self, capture: &CaptureId) -> Vec<&ProjectId> {
        self.projects
            .values()
            .filter(|p| p.members.contains(capture))
            .map(|p| &p.project_id)
            .collect()
    }

    pub(crate) fn chronology(&self, project: &Project) -> Chronology {
        Chronology::from_captures(project.members.iter().filter_map(|id| self.captures.get(id)))
    }
}

/// Metadata plus every blob's bytes; equal contents mean equal repositories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepoContents {
    pub snapshot: RepoSnapshot,
    pub blobs: BTreeMap<String, Vec<u8>>,
}

type Clock = Box<dyn Fn() -> i64 + Send + Sync>;

pub struct Repository {
    storage: Arc<dyn Storage>,
    state: RwLock<RepoSnapshot>,
    writer: Mutex<()>,
    clock: Clock,
}

impl std::fmt::Debug for Repository {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Repository").finish_non_exhaustive()
    }
}

/// Record invariants plus every image hashing to its reference.
pub(crate) fn check_payload(
    record: &CaptureRecord,
    images: &BTreeMap<ViewAngle, Vec<u8>>,
) -> Result<()> {
    validate_capture(record).map_err(RepoError::Invalid)?;
    for angle in ViewAngle::ALL {
        let image = record.views.get(angle).expect("validated record has all views");
        let bytes = images
            .get(&angle)
            .ok_or_else(|| RepoError::ManifestMismatch(format!("no image for {angle}")))?;
        if !image.matches(bytes) {
            return Err(RepoError::ManifestMismatch(format!(
                "image {angle} hashes differently"
            )));
        }
    }
    Ok(())
}

fn system_seconds() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0)
}

fn load_collection<T: DeserializeOwned>(storage: &dyn Storage, collection: &str) -> Result<Vec<T>> {
    let keys = storage
        .list_docs(collection)
        .map_err(RepoError::storage(format!("listing {collection}")))?;
    let mut out = Vec::with_capacity(keys.len());
    for key in keys {
        let location = format!("{collection}/{key}");
        let Some(bytes) = storage
            .get_doc(collection, &key)
            .map_err(RepoError::storage(format!("reading {location}")))?
        else {
            continue;
        };
        out.push(decode(&location, &bytes)?);
    }
    Ok(out)
}

impl Repository {
    /// Open a repository over `storage`, loading every document. The
    /// built-in coding schemes are added if missing.
    pub fn open(storage: Arc<dyn Storage>) -> Result<Self> {
        let s = storage.as_ref();
        let mut snap = RepoSnapshot::default();
        for r in load_collection::<CaptureRecord>(s, CAPTURES)? {
            snap.captures.insert(r.capture_id.clone(), r);
        }
        for u in load_collection::<User>(s, USERS)? {
            snap.users.insert(u.user_id.clone(), u);
        }
        for p in load_collection::<Project>(s, PROJECTS)? {
            snap.projects.insert(p.project_id.clone(), p);
        }
        for sc in load_collection::<CodingScheme>(s, SCHEMES)? {
            snap.schemes.insert(sc.scheme_id.clone(), sc);
        }
        for scheme in snap.schemes.keys() {
            for a in load_collection::<CodeAssignment>(s, &codes_collection(scheme))? {
                snap.assignments
                    .insert((a.scheme_id.clone(), a.capture_id.clone()), a);
            }
        }
        for g in load_collection::<LinkGraph>(s, GRAPHS)? {
            snap.graphs.insert(g.project_id.clone(), g);
        }
        snap.audit = load_collection(s, AUDIT)?;
        snap.audit.sort_by_key(|c: &TimestampCorrection| c.seq);

        let repo = Self {
            storage,
            state: RwLock::new(snap),
            writer: Mutex::new(()),
            clock: Box::new(system_seconds),
        };
        for scheme in builtin_schemes() {
            if !repo.read().schemes.contains_key(&scheme.scheme_id) {
                repo.create_scheme(scheme)?;
            }
        }
        Ok(repo)
    }

    /// File-backed repository rooted at `dir`.
    pub fn open_dir(dir: impl Into<std::path::PathBuf>) -> Result<Self> {
        let dir = dir.into();
        let storage = FsStorage::open(&dir)
            .map_err(RepoError::storage(format!("opening data directory {}", dir.display())))?;
        Self::open(Arc::new(storage))
    }

    pub fn in_memory() -> Self {
        Self::open(Arc::new(crate::storage::MemStorage::new())).expect("memory storage cannot fail")
    }

    /// Replace the clock used to stamp audit entries (UNIX seconds).
    pub fn with_clock(mut self, clock: impl Fn() -> i64 + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    pub fn storage(&self) -> &Arc<dyn Storage> {
        &self.storage
    }

    pub(crate) fn read(&self) -> std::sync::RwLockReadGuard<'_, RepoSnapshot> {
        self.state.read().expect("repository state lock")
    }

    pub(crate) fn lock_writer(&self) -> MutexGuard<'_, ()> {
        self.writer.lock().expect("repository writer lock")
    }

    pub(crate) fn update<R>(&self, f: impl FnOnce(&mut RepoSnapshot) -> R) -> R {
        f(&mut self.state.write().expect("repository state lock"))
    }

    pub(crate) fn put_doc<T: Serialize>(&self, collection: &str, key: &str, value: &T) -> Result<()> {
        self.storage
            .put_doc(collection, key, &encode(value))
            .map_err(RepoError::storage(format!("writing {collection}/{key}")))
    }

    pub fn snapshot(&self) -> RepoSnapshot {
        self.read().clone()
    }

    /// Snapshot plus all blob bytes. Intended for equality checks.
    pub fn contents(&self) -> Result<RepoContents> {
        let _w = self.lock_writer();
        let snapshot = self.snapshot();
        let mut blobs = BTreeMap::new();
        for hash in self
            .storage
            .list_blobs()
            .map_err(RepoError::storage("listing blobs"))?
        {
            let bytes = self.blob(&hash)?.unwrap_or_default();
            blobs.insert(hash, bytes);
        }
        Ok(RepoContents { snapshot, blobs })
    }

    pub fn capture_count(&self) -> usize {
        self.read().captures.len()
    }

    // ---------------------------------------------------------------- ingest

    /// Store a capture and its seven images. Re-sending a stored capture id
    /// changes nothing and returns `created: false`.
    pub fn ingest(
        &self,
        record: &CaptureRecord,
        images: &BTreeMap<ViewAngle, Vec<u8>>,
    ) -> Result<IngestReceipt> {
        let _w = self.lock_writer();
        self.ingest_locked(record, images)
    }

    /// Ingest with the writer lock already held.
    pub(crate) fn ingest_locked(
        &self,
        record: &CaptureRecord,
        images: &BTreeMap<ViewAngle, Vec<u8>>,
    ) -> Result<IngestReceipt> {
        check_payload(record, images)?;
        if self.read().captures.contains_key(&record.capture_id) {
            return Ok(IngestReceipt {
                capture_id: record.capture_id.clone(),
                created: false,
                stored_views: ViewAngle::ALL.len(),
            });
        }

        let mut written = Vec::new();
        let result = (|| {
            for (angle, image) in record.views.iter() {
                let fresh = self
                    .storage
                    .put_blob(&image.content_hash, &images[&angle])
                    .map_err(RepoError::storage(format!("writing blob {}", image.content_hash)))?;
                if fresh {
                    written.push(image.content_hash.clone());
                }
            }
            self.put_doc(CAPTURES, record.capture_id.as_str(), record)
        })();
        if let Err(e) = result {
            for hash in written {
                let _ = self.storage.delete_blob(&hash);
            }
            return Err(e);
        }

        self.update(|s| s.captures.insert(record.capture_id.clone(), record.clone()));
        tracing::debug!(capture = %record.capture_id, "ingested");
        Ok(IngestReceipt {
            capture_id: record.capture_id.clone(),
            created: true,
            stored_views: ViewAngle::ALL.len(),
        })
    }

    pub fn capture(&self, id: &CaptureId) -> Result<CaptureRecord> {
        self.read()
            .captures
            .get(id)
            .cloned()
            .ok_or_else(|| RepoError::not_found("capture", id))
    }

    pub fn blob(&self, hash: &str) -> Result<Option<Vec<u8>>> {
        self.storage
            .get_blob(hash)
            .map_err(RepoError::storage(format!("reading blob {hash}")))
    }

    /// Image bytes and media type of one view.
    pub fn view_image(&self, id: &CaptureId, angle: ViewAngle) -> Result<(Vec<u8>, String)> {
        let record = self.capture(id)?;
        let image = record
            .views
            .get(angle)
            .ok_or_else(|| RepoError::not_found("view", format!("{id}/{angle}")))?;
        let bytes = self
            .blob(&image.content_hash)?
            .ok_or_else(|| RepoError::not_found("blob", &image.content_hash))?;
        Ok((bytes, image.media_type.clone()))
    }

    pub fn query_captures(&self, filter: &CaptureFilter) -> Vec<CaptureRecord> {
        self.read().query(filter)
    }

    pub fn capturer(&self, record: &CaptureRecord) -> Capturer {
        self.read().capturer(record)
    }

    /// Delete blobs no capture refers to. Returns how many were removed.
    pub fn collect_garbage(&self) -> Result<usize> {
        let _w = self.lock_writer();
        let referenced: BTreeSet<String> = self
            .read()
            .captures
            .values()
            .flat_map(|r| r.views.iter().map(|(_, i)| i.content_hash.clone()))
            .collect();
        let mut removed = 0;
        for hash in self
            .storage
            .list_blobs()
            .map_err(RepoError::storage("listing blobs"))?
        {
            if !referenced.contains(&hash) {
                self.storage
                    .delete_blob(&hash)
                    .map_err(RepoError::storage(format!("deleting blob {hash}")))?;
                removed += 1;
            }
        }
        Ok(removed)
    }

    // ------------------------------------------------------- users and cards

    /// Create a user; repeating the call with the same name is a no-op.
    pub fn create_user(&self, user_id: UserId, display_name: impl Into<String>) -> Result<User> {
        if !user_id.is_path_safe() {
            return Err(RepoError::InvalidId(user_id.to_string()));
        }
        let display_name = display_name.into();
        let _w = self.lock_writer();
        if let Some(existing) = self.read().users.get(&user_id) {
            return if existing.display_name == display_name {
                Ok(existing.clone())
            } else {
                Err(RepoError::UserExists(user_id))
            };
        }
        let user = User {
            user_id: user_id.clone(),
            display_name,
            card_ids: BTreeSet::new(),
        };
        self.put_doc(USERS, user_id.as_str(), &user)?;
        self.update(|s| s.users.insert(user_id, user.clone()));
        Ok(user)
    }

    pub fn user(&self, id: &UserId) -> Result<User> {
        self.read()
            .users
            .get(id)
            .cloned()
            .ok_or_else(|| RepoError::not_found("user", id))
    }

    pub fn users(&self) -> Vec<User> {
        self.read().users.values().cloned().collect()
    }

    /// Bind a card to a user. Captures already made with the card are
    /// attributed to the user from now on.
    pub fn register_card(&self, card_id: CardId, user_id: &UserId) -> Result<User> {
        let _w = self.lock_writer();
        let mut user = self.user(user_id)?;
        if let Some(owner) = self.read().card_owner(&card_id) {
            if owner.user_id != *user_id {
                return Err(RepoError::CardConflict {
                    card: card_id,
                    user: owner.user_id.clone(),
                });
            }
            return Ok(owner.clone());
        }
        user.card_ids.insert(card_id);
        self.put_doc(USERS, user_id.as_str(), &user)?;
        self.update(|s| s.users.insert(user_id.clone(), user.clone()));
        Ok(user)
    }

    // --------------------------------------------------------------- projects

    pub fn create_project(
        &self,
        title: impl Into<String>,
        description: impl Into<String>,
        creator: &UserId,
    ) -> Result<Project> {
        let _w = self.lock_writer();
        self.user(creator)?;
        let n = self.read().projects.len() + 1;
        let mut project_id = ProjectId::new(format!("proj-{n:04}"));
        let mut bump = n;
        while self.read().projects.contains_key(&project_id) {
            bump += 1;
            project_id = ProjectId::new(format!("proj-{bump:04}"));
        }
        let project = Project {
            project_id: project_id.clone(),
            title: title.into(),
            description: description.into(),
            contributors: BTreeSet::from([creator.clone()]),
            members: BTreeSet::new(),
        };
        self.put_doc(PROJECTS, project_id.as_str(), &project)?;
        self.update(|s| s.projects.insert(project_id, project.clone()));
        Ok(project)
    }

    pub fn project(&self, id: &ProjectId) -> Result<Project> {
        self.read()
            .projects
            .get(id)
            .cloned()
            .ok_or_else(|| RepoError::not_found("project", id))
    }

    pub fn projects(&self) -> Vec<Project> {
        self.read().projects.values().cloned().collect()
    }

    fn save_project(&self, project: Project) -> Result<Project> {
        self.put_doc(PROJECTS, project.project_id.as_str(), &project)?;
        self.update(|s| s.projects.insert(project.project_id.clone(), project.clone()));
        Ok(project)
    }

    pub fn add_contributor(&self, project_id: &ProjectId, user_id: &UserId) -> Result<Project> {
        let _w = self.lock_writer();
        self.user(user_id)?;
        let mut project = self.project(project_id)?;
        if !project.contributors.insert(user_id.clone()) {
            return Ok(project);
        }
        self.save_project(project)
    }

    /// Add captures to a project. Set semantics: repeats change nothing.
    pub fn assign_to_project(&self, project_id: &ProjectId, capture_ids: &[CaptureId]) -> Result<Project> {
        let _w = self.lock_writer();
        let mut project = self.project(project_id)?;
        {
            let s = self.read();
            if let Some(missing) = capture_ids.iter().find(|c| !s.captures.contains_key(*c)) {
                return Err(RepoError::not_found("capture", missing));
            }
        }
        let before = project.members.len();
        project.members.extend(capture_ids.iter().cloned());
        if project.members.len() == before {
            return Ok(project);
        }
        self.save_project(project)
    }

    // ------------------------------------------------------------ annotation

    pub fn annotate(&self, id: &CaptureId, patch: &AnnotationPatch) -> Result<CaptureRecord> {
        let _w = self.lock_writer();
        let mut record = self.capture(id)?;
        let before = record.annotation.clone();
        record.annotation.apply(patch);
        if record.annotation == before {
            return Ok(record);
        }
        self.put_doc(CAPTURES, id.as_str(), &record)?;
        self.update(|s| s.captures.insert(id.clone(), record.clone()));
        Ok(record)
    }

    /// Change a capture's timestamp, appending to the audit log.
    ///
    /// Refused when the new time would make an existing link point backwards.
    pub fn correct_timestamp(
        &self,
        id: &CaptureId,
        new_timestamp: i64,
        note: impl Into<String>,
    ) -> Result<TimestampCorrection> {
        if new_timestamp <= 0 {
            return Err(RepoError::NonpositiveTimestamp(new_timestamp));
        }
        let _w = self.lock_writer();
        let mut record = self.capture(id)?;
        let old_timestamp = record.timestamp;
        record.timestamp = new_timestamp;

        {
            let s = self.read();
            let mut trial = s.clone();
            trial.captures.insert(id.clone(), record.clone());
            for project_id in s.projects_of(id) {
                let Some(graph) = s.graphs.get(project_id) else {
                    continue;
                };
                let chronology = trial.chronology(&s.projects[project_id]);
                for link in &graph.edges {
                    let (Some(a), Some(b)) = (chronology.rank(&link.from), chronology.rank(&link.to))
                    else {
                        continue;
                    };
                    if a >= b && (link.from == *id || link.to == *id) {
                        return Err(RepoError::CorrectionBreaksLink {
                            from: link.from.to_string(),
                            to: link.to.to_string(),
                        });
                    }
                }
            }
        }

        let seq = self.read().audit.last().map_or(1, |c| c.seq + 1);
        let correction = TimestampCorrection {
            seq,
            capture_id: id.clone(),
            old_timestamp,
            new_timestamp,
            note: note.into(),
            corrected_at: (self.clock)(),
        };
        self.put_doc(AUDIT, &format!("{seq:010}"), &correction)?;
        self.put_doc(CAPTURES, id.as_str(), &record)?;
        self.update(|s| {
            s.audit.push(correction.clone());
            s.captures.insert(id.clone(), record);
        });
        Ok(correction)
    }

    pub fn audit_log(&self, id: Option<&CaptureId>) -> Vec<TimestampCorrection> {
        self.read()
            .audit
            .iter()
            .filter(|c| id.is_none_or(|id| c.capture_id == *id))
            .cloned()
            .collect()
    }

    // ---------------------------------------------------------------- coding

    pub fn schemes(&self) -> Vec<CodingScheme> {
        self.read().schemes.values().cloned().collect()
    }

    pub fn scheme(&self, id: &SchemeId) -> Result<CodingScheme> {
        self.read()
            .schemes
            .get(id)
            .cloned()
            .ok_or_else(|| RepoError::not_found("scheme", id))
    }

    /// Register a custom scheme. Re-registering an identical scheme is a
    /// no-op; changing an existing one is refused.
    pub fn create_scheme(&self, scheme: CodingScheme) -> Result<CodingScheme> {
        scheme.check()?;
        if !scheme.scheme_id.is_path_safe() {
            return Err(RepoError::InvalidId(scheme.scheme_id.to_string()));
        }
        let _w = self.lock_writer();
        if let Some(existing) = self.read().schemes.get(&scheme.scheme_id) {
            if *existing == scheme {
                return Ok(scheme);
            }
            return Err(RepoError::InvalidId(format!(
                "scheme {} already exists",
                scheme.scheme_id
            )));
        }
        self.put_doc(SCHEMES, scheme.scheme_id.as_str(), &scheme)?;
        self.update(|s| s.schemes.insert(scheme.scheme_id.clone(), scheme.clone()));
        Ok(scheme)
    }

    /// Set the categories of one capture under one scheme, replacing any
    /// earlier assignment.
    pub fn set_codes<S: AsRef<str>>(
        &self,
        capture_id: &CaptureId,
        scheme_id: &SchemeId,
        categories: &[S],
    ) -> Result<CodeAssignment> {
        let _w = self.lock_writer();
        self.capture(capture_id)?;
        let scheme = self.scheme(scheme_id)?;
        let assignment = assign_codes(capture_id.clone(), &scheme, categories)?;
        self.put_doc(&codes_collection(scheme_id), capture_id.as_str(), &assignment)?;
        self.update(|s| {
            s.assignments
                .insert((scheme_id.clone(), capture_id.clone()), assignment.clone())
        });
        Ok(assignment)
    }

    pub fn codes(&self, capture_id: &CaptureId) -> Vec<CodeAssignment> {
        self.read()
            .assignments
            .values()
            .filter(|a| a.capture_id == *capture_id)
            .cloned()
            .collect()
    }

    // ----------------------------------------------------------------- links

    /// The project's link graph; empty if none has been drawn.
    pub fn links(&self, project_id: &ProjectId) -> Result<LinkGraph> {
        let s = self.read();
        if !s.projects.contains_key(project_id) {
            return Err(RepoError::not_found("project", project_id));
        }
        Ok(s.graphs
            .get(project_id)
            .cloned()
            .unwrap_or_else(|| LinkGraph::new(project_id.clone())))
    }

    fn save_graph(&self, graph: LinkGraph) -> Result<LinkGraph> {
        self.put_doc(GRAPHS, graph.project_id.as_str(), &graph)?;
        self.update(|s| s.graphs.insert(graph.project_id.clone(), graph.clone()));
        Ok(graph)
    }

    fn edit_graph(
        &self,
        project_id: &ProjectId,
        f: impl FnOnce(&mut LinkGraph, &Chronology) -> Result<()>,
    ) -> Result<LinkGraph> {
        let _w = self.lock_writer();
        let project = self.project(project_id)?;
        let mut graph = self.links(project_id)?;
        let chronology = self.read().chronology(&project);
        f(&mut graph, &chronology)?;
        self.save_graph(graph)
    }

    pub fn add_link(&self, project_id: &ProjectId, from: &CaptureId, to: &CaptureId) -> Result<LinkGraph> {
        self.edit_graph(project_id, |g, c| Ok(g.add_link(c, from, to)?))
    }

    pub fn remove_link(&self, project_id: &ProjectId, from: &CaptureId, to: &CaptureId) -> Result<LinkGraph> {
        self.edit_graph(project_id, |g, _| {
            g.remove_link(from, to);
            Ok(())
        })
    }

    pub fn set_node_class(&self, project_id: &ProjectId, id: &CaptureId, class: NodeClass) -> Result<LinkGraph> {
        self.edit_graph(project_id, |g, c| Ok(g.set_class(c, id, class)?))
    }

    /// Replace the whole graph, re-checking every edge and class.
    pub fn put_links(
        &self,
        project_id: &ProjectId,
        node_classes: BTreeMap<CaptureId, NodeClass>,
        edges: impl IntoIterator<Item = Link>,
    ) -> Result<LinkGraph> {
        self.edit_graph(project_id, |g, c| {
            let mut fresh = LinkGraph::new(project_id.clone());
            // Non-final classes first so a lone final is never reported as a duplicate.
            let mut classes: Vec<_> = node_classes.into_iter().collect();
            classes.sort_by_key(|(_, cls)| *cls == NodeClass::FinalConcept);
            for (id, class) in classes {
                fresh.set_class(c, &id, class)?;
            }
            for link in edges {
                fresh.add_link(c, &link.from, &link.to)?;
            }
            *g = fresh;
            Ok(())
        })
    }
}
