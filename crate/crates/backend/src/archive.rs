//! Raw-data archives: every document and image of a repository (or of one
//! project) plus a manifest of content hashes.
//!
//! ```text
//! manifest.json
//! captures/<capture_id>/meta
//! captures/<capture_id>/<angle>.<ext>
//! users/<user_id>.json
//! projects/<project_id>.json
//! schemes/<scheme_id>.json
//! codes/<scheme_id>/<capture_id>.json
//! graphs/<project_id>.json
//! audit/<seq>.json
//! ```
//!
//! Documents use the repository's own encoding, so export followed by import
//! reproduces byte-identical metadata.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use protobooth_core::{
    content_hash, CaptureId, CaptureRecord, CodeAssignment, CodingScheme, LinkGraph, Project,
    ProjectId, User, ViewAngle,
};
use serde::{Deserialize, Serialize};

use crate::error::{RepoError, Result};
use crate::repo::{
    check_payload, codes_collection, decode, encode, RepoSnapshot, Repository,
    TimestampCorrection, AUDIT, GRAPHS, PROJECTS, SCHEMES, USERS,
};

pub const MANIFEST: &str = "manifest.json";
pub const FORMAT: &str = "protobooth-archive";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureEntry {
    pub capture_id: CaptureId,
    /// sha256 of `captures/<id>/meta`.
    pub meta: String,
    pub views: BTreeMap<ViewAngle, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    #[serde(default)]
    pub project: Option<ProjectId>,
    /// One entry per exported capture.
    pub entries: Vec<CaptureEntry>,
    /// Every file in the archive except the manifest itself.
    pub files: Vec<FileEntry>,
}

/// What an import changed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportReport {
    pub captures_created: usize,
    pub captures_existing: usize,
    pub documents_written: usize,
}

/// In-memory archive: relative path to bytes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Archive {
    pub files: BTreeMap<String, Vec<u8>>,
}

fn bad(msg: impl Into<String>) -> RepoError {
    RepoError::Archive(msg.into())
}

fn io_err(context: &str) -> impl FnOnce(io::Error) -> RepoError + '_ {
    move |e| bad(format!("{context}: {e}"))
}

fn safe_path(path: &str) -> bool {
    !path.is_empty()
        && !path.starts_with('/')
        && path
            .split('/')
            .all(|seg| !seg.is_empty() && seg != "." && seg != ".." && !seg.contains('\\'))
}

impl Archive {
    pub fn manifest(&self) -> Result<Manifest> {
        let bytes = self
            .files
            .get(MANIFEST)
            .ok_or_else(|| bad("missing manifest.json"))?;
        decode(MANIFEST, bytes)
    }

    /// Check the manifest against the files actually present.
    pub fn check(&self) -> Result<Manifest> {
        let manifest = self.manifest()?;
        if manifest.format != FORMAT || manifest.version != VERSION {
            return Err(bad(format!(
                "unsupported format {} v{}",
                manifest.format, manifest.version
            )));
        }
        let listed: BTreeSet<&str> = manifest.files.iter().map(|f| f.path.as_str()).collect();
        for f in &manifest.files {
            let bytes = self
                .files
                .get(&f.path)
                .ok_or_else(|| bad(format!("missing file {}", f.path)))?;
            if content_hash(bytes) != f.sha256 || bytes.len() as u64 != f.bytes {
                return Err(bad(format!("hash mismatch for {}", f.path)));
            }
        }
        if let Some(extra) = self
            .files
            .keys()
            .find(|p| p.as_str() != MANIFEST && !listed.contains(p.as_str()))
        {
            return Err(bad(format!("file {extra} not listed in manifest")));
        }
        Ok(manifest)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        for (path, bytes) in &self.files {
            let target = dir.join(path);
            if let Some(parent) = target.parent() {
                fs::create_dir_all(parent).map_err(io_err(path))?;
            }
            fs::write(&target, bytes).map_err(io_err(path))?;
        }
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) -> io::Result<()> {
            for e in fs::read_dir(dir)? {
                let e = e?;
                let path = e.path();
                if e.file_type()?.is_dir() {
                    walk(base, &path, out)?;
                } else {
                    let rel = path
                        .strip_prefix(base)
                        .expect("walked path under base")
                        .components()
                        .map(|c| c.as_os_str().to_string_lossy().into_owned())
                        .collect::<Vec<_>>()
                        .join("/");
                    out.insert(rel, fs::read(&path)?);
                }
            }
            Ok(())
        }
        let mut files = BTreeMap::new();
        walk(dir, dir, &mut files).map_err(io_err(&dir.display().to_string()))?;
        Ok(Self { files })
    }

    /// Deterministic tar stream: fixed mtime, mode and owner.
    pub fn to_tar(&self) -> Vec<u8> {
        let mut builder = tar::Builder::new(Vec::new());
        for (path, bytes) in &self.files {
            let mut header = tar::Header::new_ustar();
            header.set_size(bytes.len() as u64);
            header.set_mode(0o644);
            header.set_mtime(0);
            header.set_uid(0);
            header.set_gid(0);
            header.set_entry_type(tar::EntryType::Regular);
            builder
                .append_data(&mut header, path, bytes.as_slice())
                .expect("writing tar to memory");
        }
        builder.into_inner().expect("finishing tar in memory")
    }

    pub fn from_tar(reader: impl Read) -> Result<Self> {
        let mut ar = tar::Archive::new(reader);
        let mut files = BTreeMap::new();
        for entry in ar.entries().map_err(io_err("reading tar"))? {
            let mut entry = entry.map_err(io_err("reading tar entry"))?;
            if !entry.header().entry_type().is_file() {
                continue;
            }
            let path = entry
                .path()
                .map_err(io_err("tar entry path"))?
                .to_string_lossy()
                .trim_start_matches("./")
                .to_owned();
            if !safe_path(&path) {
                return Err(bad(format!("unsafe path {path:?}")));
            }
            let mut bytes = Vec::new();
            entry
                .read_to_end(&mut bytes)
                .map_err(io_err("reading tar entry"))?;
            files.insert(path, bytes);
        }
        Ok(Self { files })
    }

    pub fn write_tar(&self, mut w: impl Write) -> io::Result<()> {
        w.write_all(&self.to_tar())
    }
}

fn meta_path(id: &CaptureId) -> String {
    format!("captures/{id}/meta")
}

fn view_path(id: &CaptureId, angle: ViewAngle, ext: &str) -> String {
    format!("captures/{id}/{angle}.{ext}")
}

/// Build an archive from a snapshot, reading blobs through `blob`.
fn build(
    snap: &RepoSnapshot,
    project: Option<&ProjectId>,
    mut blob: impl FnMut(&str) -> Result<Vec<u8>>,
) -> Result<Archive> {
    let captures: Vec<&CaptureRecord> = match project {
        Some(p) => {
            let members = &snap
                .projects
                .get(p)
                .ok_or_else(|| RepoError::not_found("project", p))?
                .members;
            snap.captures
                .values()
                .filter(|c| members.contains(&c.capture_id))
                .collect()
        }
        None => snap.captures.values().collect(),
    };
    let ids: BTreeSet<&CaptureId> = captures.iter().map(|c| &c.capture_id).collect();

    let mut files = BTreeMap::new();
    let mut entries = Vec::new();
    for record in &captures {
        let meta = encode(record);
        let mut views = BTreeMap::new();
        for (angle, image) in record.views.iter() {
            let bytes = blob(&image.content_hash)?;
            files.insert(view_path(&record.capture_id, angle, image.extension()), bytes);
            views.insert(angle, image.content_hash.clone());
        }
        entries.push(CaptureEntry {
            capture_id: record.capture_id.clone(),
            meta: content_hash(&meta),
            views,
        });
        files.insert(meta_path(&record.capture_id), meta);
    }

    let projects: Vec<&Project> = match project {
        Some(p) => vec![&snap.projects[p]],
        None => snap.projects.values().collect(),
    };
    let users: Vec<&User> = match project {
        Some(_) => {
            let cards: BTreeSet<_> = captures.iter().map(|c| &c.card_id).collect();
            snap.users
                .values()
                .filter(|u| {
                    projects[0].contributors.contains(&u.user_id)
                        || u.card_ids.iter().any(|c| cards.contains(c))
                })
                .collect()
        }
        None => snap.users.values().collect(),
    };
    for u in users {
        files.insert(format!("{USERS}/{}.json", u.user_id), encode(u));
    }
    for p in &projects {
        files.insert(format!("{PROJECTS}/{}.json", p.project_id), encode(p));
        if let Some(g) = snap.graphs.get(&p.project_id) {
            files.insert(format!("{GRAPHS}/{}.json", p.project_id), encode(g));
        }
    }
    for s in snap.schemes.values() {
        files.insert(format!("{SCHEMES}/{}.json", s.scheme_id), encode(s));
    }
    for ((scheme, capture), a) in &snap.assignments {
        if ids.contains(capture) {
            files.insert(format!("{}/{capture}.json", codes_collection(scheme)), encode(a));
        }
    }
    for c in snap.audit.iter().filter(|c| ids.contains(&c.capture_id)) {
        files.insert(format!("{AUDIT}/{:010}.json", c.seq), encode(c));
    }

    let manifest = Manifest {
        format: FORMAT.into(),
        version: VERSION,
        project: project.cloned(),
        entries,
        files: files
            .iter()
            .map(|(path, bytes)| FileEntry {
                path: path.clone(),
                sha256: content_hash(bytes),
                bytes: bytes.len() as u64,
            })
            .collect(),
    };
    files.insert(MANIFEST.into(), encode(&manifest));
    Ok(Archive { files })
}

/// Parsed archive contents, checked but not yet applied.
#[derive(Default)]
struct Parsed {
    captures: Vec<(CaptureRecord, BTreeMap<ViewAngle, Vec<u8>>)>,
    users: Vec<User>,
    projects: Vec<Project>,
    schemes: Vec<CodingScheme>,
    codes: Vec<CodeAssignment>,
    graphs: Vec<LinkGraph>,
    audit: Vec<TimestampCorrection>,
}

fn parse(archive: &Archive) -> Result<Parsed> {
    let manifest = archive.check()?;
    let mut out = Parsed::default();
    for entry in &manifest.entries {
        let path = meta_path(&entry.capture_id);
        let bytes = archive
            .files
            .get(&path)
            .ok_or_else(|| bad(format!("missing {path}")))?;
        if content_hash(bytes) != entry.meta {
            return Err(bad(format!("hash mismatch for {path}")));
        }
        let record: CaptureRecord = decode(&path, bytes)?;
        if record.capture_id != entry.capture_id {
            return Err(bad(format!("{path} holds capture {}", record.capture_id)));
        }
        let mut images = BTreeMap::new();
        for (angle, image) in record.views.iter() {
            let vp = view_path(&record.capture_id, angle, image.extension());
            let bytes = archive
                .files
                .get(&vp)
                .ok_or_else(|| bad(format!("missing {vp}")))?;
            images.insert(angle, bytes.clone());
        }
        out.captures.push((record, images));
    }
    for (path, bytes) in &archive.files {
        let Some(dir) = path.rsplit_once('/').map(|(d, _)| d) else {
            continue;
        };
        match dir {
            USERS => out.users.push(decode(path, bytes)?),
            PROJECTS => out.projects.push(decode(path, bytes)?),
            SCHEMES => out.schemes.push(decode(path, bytes)?),
            GRAPHS => out.graphs.push(decode(path, bytes)?),
            AUDIT => out.audit.push(decode(path, bytes)?),
            d if d.starts_with("codes/") => out.codes.push(decode(path, bytes)?),
            _ => {}
        }
    }
    Ok(out)
}

fn conflict(kind: &str, id: impl std::fmt::Display) -> RepoError {
    bad(format!("{kind} {id} differs from the stored one"))
}

impl Repository {
    /// Export everything, or only one project's captures and their context.
    pub fn export_raw(&self, project: Option<&ProjectId>) -> Result<Archive> {
        let _w = self.lock_writer();
        let snap = self.snapshot();
        build(&snap, project, |hash| {
            self.blob(hash)?
                .ok_or_else(|| RepoError::not_found("blob", hash))
        })
    }

    /// Merge an archive into this repository. Entities already present must
    /// be identical; importing the same archive again changes nothing.
    pub fn import_archive(&self, archive: &Archive) -> Result<ImportReport> {
        let parsed = parse(archive)?;
        let mut report = ImportReport::default();
        let _w = self.lock_writer();
        let snap = self.snapshot();

        // Check everything against the merged view before writing anything.
        let mut merged = snap.clone();
        for (record, images) in &parsed.captures {
            check_payload(record, images)?;
            match snap.captures.get(&record.capture_id) {
                Some(existing) if existing != record => {
                    return Err(conflict("capture", &record.capture_id))
                }
                _ => {
                    merged
                        .captures
                        .insert(record.capture_id.clone(), record.clone());
                }
            }
        }
        for u in &parsed.users {
            if snap.users.get(&u.user_id).is_some_and(|x| x != u) {
                return Err(conflict("user", &u.user_id));
            }
            for card in &u.card_ids {
                if let Some(owner) = snap.card_owner(card) {
                    if owner.user_id != u.user_id {
                        return Err(RepoError::CardConflict {
                            card: card.clone(),
                            user: owner.user_id.clone(),
                        });
                    }
                }
            }
        }
        for p in &parsed.projects {
            if snap.projects.get(&p.project_id).is_some_and(|x| x != p) {
                return Err(conflict("project", &p.project_id));
            }
            if let Some(m) = p.members.iter().find(|m| !merged.captures.contains_key(*m)) {
                return Err(RepoError::not_found("capture", m));
            }
            merged.projects.insert(p.project_id.clone(), p.clone());
        }
        for s in &parsed.schemes {
            s.check()?;
            if snap.schemes.get(&s.scheme_id).is_some_and(|x| x != s) {
                return Err(conflict("scheme", &s.scheme_id));
            }
            merged.schemes.insert(s.scheme_id.clone(), s.clone());
        }
        for a in &parsed.codes {
            let scheme = merged
                .schemes
                .get(&a.scheme_id)
                .ok_or_else(|| RepoError::not_found("scheme", &a.scheme_id))?;
            a.check(scheme)?;
            if !merged.captures.contains_key(&a.capture_id) {
                return Err(RepoError::not_found("capture", &a.capture_id));
            }
        }
        for g in &parsed.graphs {
            let project = merged
                .projects
                .get(&g.project_id)
                .ok_or_else(|| RepoError::not_found("project", &g.project_id))?;
            if let Some(v) = g.check(&merged.chronology(project)).first() {
                return Err(bad(format!("graph {}: {v}", g.project_id)));
            }
            if snap.graphs.get(&g.project_id).is_some_and(|x| x != g) {
                return Err(conflict("graph", &g.project_id));
            }
        }
        for c in &parsed.audit {
            if snap.audit.iter().any(|x| x.seq == c.seq && x != c) {
                return Err(conflict("audit entry", c.seq));
            }
        }

        for (record, images) in &parsed.captures {
            if self.ingest_locked(record, images)?.created {
                report.captures_created += 1;
            } else {
                report.captures_existing += 1;
            }
        }

        let mut written = 0;
        let mut put = |collection: &str, key: &str, bytes: Vec<u8>| -> Result<()> {
            if self
                .storage()
                .get_doc(collection, key)
                .map_err(RepoError::storage(format!("reading {collection}/{key}")))?
                .as_deref()
                != Some(bytes.as_slice())
            {
                self.storage()
                    .put_doc(collection, key, &bytes)
                    .map_err(RepoError::storage(format!("writing {collection}/{key}")))?;
                written += 1;
            }
            Ok(())
        };
        for s in &parsed.schemes {
            put(SCHEMES, s.scheme_id.as_str(), encode(s))?;
        }
        for u in &parsed.users {
            put(USERS, u.user_id.as_str(), encode(u))?;
        }
        for p in &parsed.projects {
            put(PROJECTS, p.project_id.as_str(), encode(p))?;
        }
        for a in &parsed.codes {
            put(&codes_collection(&a.scheme_id), a.capture_id.as_str(), encode(a))?;
        }
        for g in &parsed.graphs {
            put(GRAPHS, g.project_id.as_str(), encode(g))?;
        }
        for c in &parsed.audit {
            put(AUDIT, &format!("{:010}", c.seq), encode(c))?;
        }
        report.documents_written = written;

        self.update(|s| {
            for x in parsed.schemes {
                s.schemes.insert(x.scheme_id.clone(), x);
            }
            for x in parsed.users {
                s.users.insert(x.user_id.clone(), x);
            }
            for x in parsed.projects {
                s.projects.insert(x.project_id.clone(), x);
            }
            for x in parsed.codes {
                s.assignments
                    .insert((x.scheme_id.clone(), x.capture_id.clone()), x);
            }
            for x in parsed.graphs {
                s.graphs.insert(x.project_id.clone(), x);
            }
            for x in parsed.audit {
                if !s.audit.iter().any(|a| a.seq == x.seq) {
                    s.audit.push(x);
                }
            }
            s.audit.sort_by_key(|c| c.seq);
        });
        Ok(report)
    }
}
