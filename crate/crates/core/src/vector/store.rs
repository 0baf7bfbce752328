use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Modality, VectorError, VectorIndex};

pub const FORMAT_VERSION: u32 = 1;
pub const VECTORS_FILE: &str = "vectors.bin";
pub const KEYS_FILE: &str = "keys.json";

const MAGIC: &[u8; 8] = b"BLVEC\0\0\0";
const HEADER: usize = 8 + 4 + 8 + 8 + 4;

#[derive(Serialize, Deserialize)]
struct KeysFile {
    version: u32,
    modality: Modality,
    keys: Vec<String>,
}

// vectors.bin: magic, u32 version, u64 rows, u64 dims, u32 crc32 of payload,
// then rows × dims little-endian f32.
pub(super) fn save(index: &VectorIndex, dir: &Path) -> Result<(), VectorError> {
    std::fs::create_dir_all(dir)?;
    let payload: Vec<u8> = index.values.iter().flat_map(|v| v.to_le_bytes()).collect();
    let mut out = BufWriter::new(File::create(dir.join(VECTORS_FILE))?);
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(index.len() as u64).to_le_bytes())?;
    out.write_all(&(index.dims as u64).to_le_bytes())?;
    out.write_all(&crc32fast::hash(&payload).to_le_bytes())?;
    out.write_all(&payload)?;
    out.flush()?;
    let keys = KeysFile { version: FORMAT_VERSION, modality: index.modality, keys: index.keys.clone() };
    std::fs::write(dir.join(KEYS_FILE), serde_json::to_vec(&keys)?)?;
    Ok(())
}

pub(super) fn load(dir: &Path) -> Result<VectorIndex, VectorError> {
    let keys: KeysFile = serde_json::from_slice(&std::fs::read(dir.join(KEYS_FILE))?)?;
    if keys.version != FORMAT_VERSION {
        return Err(VectorError::VersionMismatch { found: keys.version, expected: FORMAT_VERSION });
    }
    let bytes = std::fs::read(dir.join(VECTORS_FILE))?;
    if bytes.len() < HEADER || &bytes[..8] != MAGIC {
        return Err(VectorError::Corrupt("bad vectors header".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap()) as usize;
    let version = u32_at(8);
    if version != FORMAT_VERSION {
        return Err(VectorError::VersionMismatch { found: version, expected: FORMAT_VERSION });
    }
    let (rows, dims, stored) = (u64_at(12), u64_at(20), u32_at(28));
    let payload = &bytes[HEADER..];
    if payload.len() != rows * dims * 4 || keys.keys.len() != rows {
        return Err(VectorError::Corrupt("payload size disagrees with header".into()));
    }
    let computed = crc32fast::hash(payload);
    if computed != stored {
        return Err(VectorError::ChecksumMismatch { stored, computed });
    }
    let values = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(VectorIndex { dims, values, keys: keys.keys, modality: keys.modality })
}
