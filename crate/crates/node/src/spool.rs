//! Durable on-disk queue of captures awaiting delivery.
//!
//! Layout: one directory per capture id holding `meta.json` and the seven
//! images as `<angle>.<ext>`. Entries are assembled under a hidden temporary
//! name and renamed into place, so a crash never leaves a partial entry
//! visible. An entry is deleted only after the backend acknowledges it.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use protobooth_core::{CaptureId, CaptureRecord, IngestReceipt, ViewAngle};
use serde::{Deserialize, Serialize};

use crate::uplink::Uplink;

const META: &str = "meta.json";
const COUNTER: &str = ".counter";
const TMP_PREFIX: &str = ".tmp-";

const BACKOFF_BASE: Duration = Duration::from_secs(5);
const BACKOFF_CAP: Duration = Duration::from_secs(600);

#[derive(Debug, thiserror::Error)]
pub enum SpoolError {
    #[error("spool i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corrupt spool entry {path}: {source}")]
    Corrupt {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("capture {0} is already spooled")]
    Duplicate(CaptureId),
    #[error("spool entry {id} lacks image {angle}")]
    MissingImage { id: CaptureId, angle: ViewAngle },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SpoolError + '_ {
    move |source| SpoolError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Delay before retry number `attempt + 1`, after `attempt` failures.
/// 5 s doubling per failure, capped at 10 minutes.
pub fn backoff_delay(attempt: u32) -> Duration {
    let exp = attempt.saturating_sub(1).min(16);
    (BACKOFF_BASE * 2u32.pow(exp)).min(BACKOFF_CAP)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpoolEntry {
    pub record: CaptureRecord,
    pub attempt_count: u32,
    /// UNIX milliseconds before which the entry is not retried.
    pub next_attempt_at_ms: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DeliveryReport {
    pub delivered: usize,
    pub deferred: usize,
    pub receipts: Vec<IngestReceipt>,
    /// Failed attempts in this flush, with the error text.
    pub failures: Vec<(CaptureId, String)>,
}

#[derive(Debug, Clone)]
pub struct Spool {
    dir: PathBuf,
}

fn write_file_synced(path: &Path, bytes: &[u8]) -> Result<(), SpoolError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))?;
    f.sync_all().map_err(io_err(path))
}

impl Spool {
    /// Open or create a spool directory, discarding half-written entries.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, SpoolError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let entry = entry.map_err(io_err(&dir))?;
            if entry.file_name().to_string_lossy().starts_with(TMP_PREFIX) {
                let p = entry.path();
                fs::remove_dir_all(&p).map_err(io_err(&p))?;
            }
        }
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn entry_dir(&self, id: &CaptureId) -> PathBuf {
        self.dir.join(id.as_str())
    }

    /// Persist a complete capture. Returns once the entry is durable.
    pub fn put(
        &self,
        record: &CaptureRecord,
        images: &BTreeMap<ViewAngle, Vec<u8>>,
    ) -> Result<(), SpoolError> {
        let id = &record.capture_id;
        let final_dir = self.entry_dir(id);
        if final_dir.exists() {
            return Err(SpoolError::Duplicate(id.clone()));
        }
        let tmp = self.dir.join(format!("{TMP_PREFIX}{id}"));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(io_err(&tmp))?;
        }
        fs::create_dir(&tmp).map_err(io_err(&tmp))?;
        for (angle, image) in record.views.iter() {
            let bytes = images.get(&angle).ok_or_else(|| SpoolError::MissingImage {
                id: id.clone(),
                angle,
            })?;
            let path = tmp.join(format!("{angle}.{}", image.extension()));
            write_file_synced(&path, bytes)?;
        }
        let entry = SpoolEntry {
            record: record.clone(),
            attempt_count: 0,
            next_attempt_at_ms: 0,
        };
        let meta = serde_json::to_vec_pretty(&entry).expect("spool entry serialises");
        write_file_synced(&tmp.join(META), &meta)?;
        fs::rename(&tmp, &final_dir).map_err(io_err(&final_dir))?;
        if let Ok(d) = fs::File::open(&self.dir) {
            let _ = d.sync_all();
        }
        Ok(())
    }

    /// All entries, oldest capture first.
    pub fn entries(&self) -> Result<Vec<SpoolEntry>, SpoolError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir).map_err(io_err(&self.dir))? {
            let entry = entry.map_err(io_err(&self.dir))?;
            let name = entry.file_name();
            if name.to_string_lossy().starts_with('.') || !entry.path().is_dir() {
                continue;
            }
            let meta_path = entry.path().join(META);
            let bytes = fs::read(&meta_path).map_err(io_err(&meta_path))?;
            let parsed: SpoolEntry =
                serde_json::from_slice(&bytes).map_err(|source| SpoolError::Corrupt {
                    path: meta_path.clone(),
                    source,
                })?;
            out.push(parsed);
        }
        out.sort_by(|a, b| {
            (a.record.timestamp, &a.record.capture_id).cmp(&(b.record.timestamp, &b.record.capture_id))
        });
        Ok(out)
    }

    pub fn len(&self) -> Result<usize, SpoolError> {
        Ok(self.entries()?.len())
    }

    pub fn is_empty(&self) -> Result<bool, SpoolError> {
        Ok(self.len()? == 0)
    }

    pub fn load_images(&self, record: &CaptureRecord) -> Result<BTreeMap<ViewAngle, Vec<u8>>, SpoolError> {
        let dir = self.entry_dir(&record.capture_id);
        record
            .views
            .iter()
            .map(|(angle, image)| {
                let path = dir.join(format!("{angle}.{}", image.extension()));
                let bytes = fs::read(&path).map_err(io_err(&path))?;
                Ok((angle, bytes))
            })
            .collect()
    }

    fn update(&self, entry: &SpoolEntry) -> Result<(), SpoolError> {
        let dir = self.entry_dir(&entry.record.capture_id);
        let tmp = dir.join(format!("{META}.tmp"));
        let meta = serde_json::to_vec_pretty(entry).expect("spool entry serialises");
        write_file_synced(&tmp, &meta)?;
        let target = dir.join(META);
        fs::rename(&tmp, &target).map_err(io_err(&target))
    }

    pub fn remove(&self, id: &CaptureId) -> Result<(), SpoolError> {
        let dir = self.entry_dir(id);
        fs::remove_dir_all(&dir).map_err(io_err(&dir))
    }

    /// Try to deliver every due entry, oldest first.
    ///
    /// Acknowledged entries are removed. A failed attempt bumps the entry's
    /// attempt count and schedules the next try with [`backoff_delay`].
    /// Entries not yet due count as deferred unless `force` is set.
    pub fn flush(
        &self,
        uplink: &mut dyn Uplink,
        now_ms: i64,
        force: bool,
    ) -> Result<DeliveryReport, SpoolError> {
        let mut report = DeliveryReport::default();
        for mut entry in self.entries()? {
            if !force && entry.next_attempt_at_ms > now_ms {
                report.deferred += 1;
                continue;
            }
            let images = self.load_images(&entry.record)?;
            match uplink.deliver(&entry.record, &images) {
                Ok(receipt) => {
                    self.remove(&entry.record.capture_id)?;
                    report.delivered += 1;
                    report.receipts.push(receipt);
                }
                Err(e) => {
                    tracing::warn!(capture = %entry.record.capture_id, error = %e, "delivery deferred");
                    entry.attempt_count += 1;
                    entry.next_attempt_at_ms =
                        now_ms + backoff_delay(entry.attempt_count).as_millis() as i64;
                    self.update(&entry)?;
                    report.deferred += 1;
                    report
                        .failures
                        .push((entry.record.capture_id.clone(), e.to_string()));
                }
            }
        }
        Ok(report)
    }

    /// Per-booth id counter, persisted next to the entries.
    pub fn load_counter(&self) -> Result<u32, SpoolError> {
        let path = self.dir.join(COUNTER);
        match fs::read_to_string(&path) {
            Ok(s) => Ok(s.trim().parse().unwrap_or(0)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(0),
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    pub fn store_counter(&self, value: u32) -> Result<(), SpoolError> {
        let tmp = self.dir.join(".counter.tmp");
        write_file_synced(&tmp, value.to_string().as_bytes())?;
        let path = self.dir.join(COUNTER);
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }
}
