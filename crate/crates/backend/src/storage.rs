//! Persistence behind the repository: a document store and a
//! content-addressed blob store.
//!
//! [`FsStorage`] keeps everything under one data directory:
//!
//! ```text
//! <root>/docs/<collection>/<key>.json
//! <root>/blobs/<hash[0..2]>/<hash>
//! ```
//!
//! Writes go to a temporary file that is renamed into place, so a document
//! or blob is either fully present or absent.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

pub trait Storage: Send + Sync {
    fn put_doc(&self, collection: &str, key: &str, bytes: &[u8]) -> io::Result<()>;
    fn get_doc(&self, collection: &str, key: &str) -> io::Result<Option<Vec<u8>>>;
    fn delete_doc(&self, collection: &str, key: &str) -> io::Result<()>;
    /// Keys in `collection`, sorted.
    fn list_docs(&self, collection: &str) -> io::Result<Vec<String>>;

    /// Store a blob under its hash. Returns `true` if it was not present.
    fn put_blob(&self, hash: &str, bytes: &[u8]) -> io::Result<bool>;
    fn get_blob(&self, hash: &str) -> io::Result<Option<Vec<u8>>>;
    fn has_blob(&self, hash: &str) -> io::Result<bool>;
    fn delete_blob(&self, hash: &str) -> io::Result<()>;
    /// All blob hashes, sorted.
    fn list_blobs(&self) -> io::Result<Vec<String>>;
}

#[derive(Debug)]
pub struct FsStorage {
    root: PathBuf,
    tmp_seq: AtomicU64,
}

impl FsStorage {
    /// Open or create a data directory.
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("docs"))?;
        fs::create_dir_all(root.join("blobs"))?;
        fs::create_dir_all(root.join("tmp"))?;
        // Leftovers from interrupted writes.
        for e in fs::read_dir(root.join("tmp"))? {
            let _ = fs::remove_file(e?.path());
        }
        let probe = root.join("tmp").join(".probe");
        fs::write(&probe, b"")?;
        fs::remove_file(&probe)?;
        Ok(Self {
            root,
            tmp_seq: AtomicU64::new(0),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn doc_path(&self, collection: &str, key: &str) -> PathBuf {
        self.root.join("docs").join(collection).join(format!("{key}.json"))
    }

    pub fn blob_path(&self, hash: &str) -> PathBuf {
        let prefix = hash.get(..2).unwrap_or("__");
        self.root.join("blobs").join(prefix).join(hash)
    }

    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> io::Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let n = self.tmp_seq.fetch_add(1, Ordering::Relaxed);
        let tmp = self
            .root
            .join("tmp")
            .join(format!("{}-{n}", std::process::id()));
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        drop(f);
        fs::rename(&tmp, path)
    }
}

fn read_optional(path: &Path) -> io::Result<Option<Vec<u8>>> {
    match fs::read(path) {
        Ok(b) => Ok(Some(b)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e),
    }
}

fn remove_optional(path: &Path) -> io::Result<()> {
    match fs::remove_file(path) {
        Err(e) if e.kind() != io::ErrorKind::NotFound => Err(e),
        _ => Ok(()),
    }
}

impl Storage for FsStorage {
    fn put_doc(&self, collection: &str, key: &str, bytes: &[u8]) -> io::Result<()> {
        self.write_atomic(&self.doc_path(collection, key), bytes)
    }

    fn get_doc(&self, collection: &str, key: &str) -> io::Result<Option<Vec<u8>>> {
        read_optional(&self.doc_path(collection, key))
    }

    fn delete_doc(&self, collection: &str, key: &str) -> io::Result<()> {
        remove_optional(&self.doc_path(collection, key))
    }

    fn list_docs(&self, collection: &str) -> io::Result<Vec<String>> {
        let dir = self.root.join("docs").join(collection);
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        let mut keys = Vec::new();
        for e in entries {
            let name = e?.file_name().to_string_lossy().into_owned();
            if let Some(key) = name.strip_suffix(".json") {
                keys.push(key.to_owned());
            }
        }
        keys.sort();
        Ok(keys)
    }

    fn put_blob(&self, hash: &str, bytes: &[u8]) -> io::Result<bool> {
        let path = self.blob_path(hash);
        if path.exists() {
            return Ok(false);
        }
        self.write_atomic(&path, bytes)?;
        Ok(true)
    }

    fn get_blob(&self, hash: &str) -> io::Result<Option<Vec<u8>>> {
        read_optional(&self.blob_path(hash))
    }

    fn has_blob(&self, hash: &str) -> io::Result<bool> {
        Ok(self.blob_path(hash).is_file())
    }

    fn delete_blob(&self, hash: &str) -> io::Result<()> {
        remove_optional(&self.blob_path(hash))
    }

    fn list_blobs(&self) -> io::Result<Vec<String>> {
        let mut out = Vec::new();
        for shard in fs::read_dir(self.root.join("blobs"))? {
            let shard = shard?;
            if !shard.file_type()?.is_dir() {
                continue;
            }
            for b in fs::read_dir(shard.path())? {
                out.push(b?.file_name().to_string_lossy().into_owned());
            }
        }
        out.sort();
        Ok(out)
    }
}

/// Volatile storage, for tests and scratch repositories.
#[derive(Debug, Default)]
pub struct MemStorage {
    docs: RwLock<BTreeMap<(String, String), Vec<u8>>>,
    blobs: RwLock<BTreeMap<String, Vec<u8>>>,
}

impl MemStorage {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Storage for MemStorage {
    fn put_doc(&self, collection: &str, key: &str, bytes: &[u8]) -> io::Result<()> {
        self.docs
            .write()
            .expect("docs lock")
            .insert((collection.to_owned(), key.to_owned()), bytes.to_vec());
        Ok(())
    }

    fn get_doc(&self, collection: &str, key: &str) -> io::Result<Option<Vec<u8>>> {
        Ok(self
            .docs
            .read()
            .expect("docs lock")
            .get(&(collection.to_owned(), key.to_owned()))
            .cloned())
    }

    fn delete_doc(&self, collection: &str, key: &str) -> io::Result<()> {
        self.docs
            .write()
            .expect("docs lock")
            .remove(&(collection.to_owned(), key.to_owned()));
        Ok(())
    }

    fn list_docs(&self, collection: &str) -> io::Result<Vec<String>> {
        Ok(self
            .docs
            .read()
            .expect("docs lock")
            .keys()
            .filter(|(c, _)| c == collection)
            .map(|(_, k)| k.clone())
            .collect())
    }

    fn put_blob(&self, hash: &str, bytes: &[u8]) -> io::Result<bool> {
        let mut blobs = self.blobs.write().expect("blobs lock");
        if blobs.contains_key(hash) {
            return Ok(false);
        }
        blobs.insert(hash.to_owned(), bytes.to_vec());
        Ok(true)
    }

    fn get_blob(&self, hash: &str) -> io::Result<Option<Vec<u8>>> {
        Ok(self.blobs.read().expect("blobs lock").get(hash).cloned())
    }

    fn has_blob(&self, hash: &str) -> io::Result<bool> {
        Ok(self.blobs.read().expect("blobs lock").contains_key(hash))
    }

    fn delete_blob(&self, hash: &str) -> io::Result<()> {
        self.blobs.write().expect("blobs lock").remove(hash);
        Ok(())
    }

    fn list_blobs(&self) -> io::Result<Vec<String>> {
        Ok(self.blobs.read().expect("blobs lock").keys().cloned().collect())
    }
}
