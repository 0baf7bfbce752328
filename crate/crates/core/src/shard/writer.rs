use std::collections::HashSet;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::{ShardError, ShardManifest, MANIFEST_FILE, SCHEMA_VERSION};
use crate::corpus::PairRecord;
use crate::json::to_canonical_vec;

/// Incremental shard writer. Records are appended in call order; a new shard
/// starts every `records_per_shard` records.
pub struct ShardWriter {
    out_dir: PathBuf,
    records_per_shard: usize,
    image_root: Option<PathBuf>,
    current: Option<tar::Builder<BufWriter<File>>>,
    in_current: usize,
    manifest: ShardManifest,
    seen: HashSet<String>,
}

impl ShardWriter {
    pub fn new(out_dir: &Path, records_per_shard: usize) -> Result<Self, ShardError> {
        if records_per_shard == 0 {
            return Err(ShardError::ZeroShardSize);
        }
        fs::create_dir_all(out_dir)?;
        Ok(ShardWriter {
            out_dir: out_dir.to_path_buf(),
            records_per_shard,
            image_root: None,
            current: None,
            in_current: 0,
            manifest: ShardManifest {
                shard_paths: Vec::new(),
                shard_record_counts: Vec::new(),
                records_per_shard,
                total_records: 0,
                schema_version: SCHEMA_VERSION,
                base_dir: out_dir.to_path_buf(),
            },
            seen: HashSet::new(),
        })
    }

    /// Read `.img` payloads from `<root>/<image_path>`. Without a root the
    /// image members are empty.
    pub fn with_image_root(mut self, root: &Path) -> Self {
        self.image_root = Some(root.to_path_buf());
        self
    }

    pub fn append(&mut self, record: &PairRecord) -> Result<(), ShardError> {
        let id = &record.pair_id;
        if id.is_empty() || id.contains('/') || id.contains('\0') {
            return Err(ShardError::InvalidPairId(id.clone()));
        }
        if !self.seen.insert(id.clone()) {
            return Err(ShardError::DuplicatePairId(id.clone()));
        }
        let image = match &self.image_root {
            Some(root) => fs::read(root.join(&record.image_path))?,
            None => Vec::new(),
        };
        let json = to_canonical_vec(record)?;

        if self.current.is_none() || self.in_current == self.records_per_shard {
            self.roll()?;
        }
        let builder = self.current.as_mut().expect("shard open");
        append_member(builder, &format!("{id}.json"), &json)?;
        append_member(builder, &format!("{id}.img"), &image)?;
        self.in_current += 1;
        *self.manifest.shard_record_counts.last_mut().expect("shard open") += 1;
        self.manifest.total_records += 1;
        Ok(())
    }

    fn roll(&mut self) -> Result<(), ShardError> {
        if let Some(b) = self.current.take() {
            b.into_inner()?;
        }
        let name = format!("shard-{:06}.tar", self.manifest.shard_paths.len());
        let file = File::create(self.out_dir.join(&name))?;
        self.current = Some(tar::Builder::new(BufWriter::new(file)));
        self.manifest.shard_paths.push(name);
        self.manifest.shard_record_counts.push(0);
        self.in_current = 0;
        Ok(())
    }

    /// Close the open shard and write `manifest.json`.
    pub fn finish(mut self) -> Result<ShardManifest, ShardError> {
        if let Some(b) = self.current.take() {
            b.into_inner()?;
        }
        let bytes = serde_json::to_vec_pretty(&self.manifest)?;
        fs::write(self.out_dir.join(MANIFEST_FILE), bytes)?;
        Ok(self.manifest)
    }
}

fn append_member<W: std::io::Write>(b: &mut tar::Builder<W>, name: &str, data: &[u8]) -> Result<(), ShardError> {
    let mut header = tar::Header::new_ustar();
    header.set_size(data.len() as u64);
    header.set_mode(0o644);
    header.set_mtime(0);
    header.set_uid(0);
    header.set_gid(0);
    header.set_entry_type(tar::EntryType::Regular);
    b.append_data(&mut header, name, data)?;
    Ok(())
}

/// Write pairs into shards of `records_per_shard` records under `out_dir`.
pub fn write_shards<I>(
    pairs: I,
    out_dir: &Path,
    records_per_shard: usize,
    image_root: Option<&Path>,
) -> Result<ShardManifest, ShardError>
where
    I: IntoIterator<Item = PairRecord>,
{
    let mut w = ShardWriter::new(out_dir, records_per_shard)?;
    if let Some(root) = image_root {
        w = w.with_image_root(root);
    }
    for p in pairs {
        w.append(&p)?;
    }
    w.finish()
}
