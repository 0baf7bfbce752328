use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, Read, Seek, SeekFrom};
use std::path::PathBuf;
use std::sync::mpsc::{sync_channel, Receiver};
use std::thread::JoinHandle;

use super::{FilterPredicate, ShardError, ShardManifest};
use crate::corpus::PairRecord;

const READ_BUFFER: usize = 64 * 1024;

/// Streaming iterator over the records of a shard set. Shards are read
/// sequentially on a background thread through a one-slot channel, so memory
/// use is bounded by a record plus the read buffer regardless of corpus size.
pub struct ShardStream {
    rx: Receiver<Result<PairRecord, ShardError>>,
    worker: Option<JoinHandle<()>>,
}

impl Iterator for ShardStream {
    type Item = Result<PairRecord, ShardError>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.rx.recv() {
            Ok(item) => Some(item),
            Err(_) => {
                if let Some(h) = self.worker.take() {
                    let _ = h.join();
                }
                None
            }
        }
    }
}

fn corrupt(shard: &str, message: impl Into<String>) -> ShardError {
    ShardError::CorruptShard { shard: shard.to_string(), message: message.into() }
}

/// Visit every record of every shard in order. Stops at the first error or
/// when `visit` returns `false`.
fn visit_records(
    manifest: &ShardManifest,
    mut visit: impl FnMut(Result<PairRecord, ShardError>) -> bool,
) {
    for i in 0..manifest.shard_paths.len() {
        let name = manifest.shard_paths[i].clone();
        let result = (|| -> Result<bool, ShardError> {
            let file = File::open(manifest.shard_path(i))?;
            let mut archive = tar::Archive::new(BufReader::with_capacity(READ_BUFFER, file));
            let mut pending: Option<String> = None;
            let mut count = 0usize;
            for entry in archive.entries()? {
                let mut entry = entry.map_err(|e| corrupt(&name, e.to_string()))?;
                let path = entry.path().map_err(|e| corrupt(&name, e.to_string()))?.to_string_lossy().into_owned();
                if let Some(id) = path.strip_suffix(".json") {
                    if let Some(prev) = pending.take() {
                        return Err(corrupt(&name, format!("record `{prev}` has no image member")));
                    }
                    let mut bytes = Vec::with_capacity(entry.size() as usize);
                    entry.read_to_end(&mut bytes)?;
                    let record: PairRecord = serde_json::from_slice(&bytes)
                        .map_err(|e| corrupt(&name, format!("member {path}: {e}")))?;
                    if record.pair_id != id {
                        return Err(corrupt(&name, format!("member {path} holds pair `{}`", record.pair_id)));
                    }
                    pending = Some(id.to_string());
                    count += 1;
                    if !visit(Ok(record)) {
                        return Ok(false);
                    }
                } else if let Some(id) = path.strip_suffix(".img") {
                    if pending.as_deref() != Some(id) {
                        return Err(corrupt(&name, format!("unexpected member {path}")));
                    }
                    pending = None;
                } else {
                    return Err(corrupt(&name, format!("unexpected member {path}")));
                }
            }
            if let Some(prev) = pending {
                return Err(corrupt(&name, format!("record `{prev}` has no image member")));
            }
            if manifest.shard_record_counts.get(i).is_some_and(|&c| c != count) {
                return Err(corrupt(&name, format!("expected {} records, found {count}", manifest.shard_record_counts[i])));
            }
            Ok(true)
        })();
        match result {
            Ok(true) => {}
            Ok(false) => return,
            Err(e) => {
                visit(Err(e));
                return;
            }
        }
    }
}

/// Stream records in shard order, optionally yielding only those that
/// satisfy `filter`.
pub fn stream_shards(manifest: &ShardManifest, filter: Option<FilterPredicate>) -> ShardStream {
    let (tx, rx) = sync_channel(1);
    let manifest = manifest.clone();
    let worker = std::thread::spawn(move || {
        visit_records(&manifest, |item| {
            let keep = match (&item, &filter) {
                (Ok(rec), Some(f)) => f.matches(rec),
                _ => true,
            };
            !keep || tx.send(item).is_ok()
        });
    });
    ShardStream { rx, worker: Some(worker) }
}

/// Position of a record's JSON member inside a shard file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemberLocation {
    pub shard_index: usize,
    pub offset: u64,
    pub size: u64,
}

/// Key → member offset table for on-demand record hydration.
#[derive(Debug, Clone)]
pub struct ShardLocator {
    shard_files: Vec<PathBuf>,
    locations: HashMap<String, MemberLocation>,
}

impl ShardLocator {
    /// Scan shard headers once; record payloads are skipped, not parsed.
    pub fn build(manifest: &ShardManifest) -> Result<Self, ShardError> {
        let mut locations = HashMap::new();
        let shard_files: Vec<PathBuf> = (0..manifest.shard_paths.len()).map(|i| manifest.shard_path(i)).collect();
        for (i, path) in shard_files.iter().enumerate() {
            let name = &manifest.shard_paths[i];
            let mut archive = tar::Archive::new(BufReader::with_capacity(READ_BUFFER, File::open(path)?));
            for entry in archive.entries()? {
                let entry = entry.map_err(|e| corrupt(name, e.to_string()))?;
                let p = entry.path().map_err(|e| corrupt(name, e.to_string()))?.to_string_lossy().into_owned();
                if let Some(id) = p.strip_suffix(".json") {
                    let loc = MemberLocation { shard_index: i, offset: entry.raw_file_position(), size: entry.size() };
                    locations.insert(id.to_string(), loc);
                }
            }
        }
        Ok(ShardLocator { shard_files, locations })
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn locate(&self, pair_id: &str) -> Option<MemberLocation> {
        self.locations.get(pair_id).copied()
    }

    /// Read one record by seeking directly to its member.
    pub fn fetch(&self, pair_id: &str) -> Result<Option<PairRecord>, ShardError> {
        let Some(loc) = self.locate(pair_id) else { return Ok(None) };
        let mut file = File::open(&self.shard_files[loc.shard_index])?;
        file.seek(SeekFrom::Start(loc.offset))?;
        let mut bytes = vec![0u8; loc.size as usize];
        file.read_exact(&mut bytes)?;
        let shard = self.shard_files[loc.shard_index].display().to_string();
        let rec: PairRecord = serde_json::from_slice(&bytes).map_err(|e| corrupt(&shard, e.to_string()))?;
        Ok(Some(rec))
    }
}
