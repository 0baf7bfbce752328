use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::AnnotateError;
use crate::corpus::PairRecord;

/// Maps inputs to fixed-dimension vectors. Implementations must be pure and
/// always return `dim()` values.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;

    fn embed_text(&self, text: &str) -> Vec<f32>;

    /// Image stand-in: embeds the caption unless overridden.
    fn embed_pair(&self, pair: &PairRecord) -> Vec<f32> {
        self.embed_text(&pair.caption)
    }
}

/// Deterministic test embedder.
///
/// The input bytes are hashed with 64-bit FNV-1a, XORed with `seed`, and the
/// result seeds a SplitMix64 sequence. Each output `z` becomes
/// `(z >> 11) * 2^-53 * 2 - 1` in `[-1, 1)`; the vector is then L2-normalized
/// in `f64` and stored as `f32`.
#[derive(Debug, Clone, Copy)]
pub struct HashEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        HashEmbedder { dim, seed }
    }

    pub fn embed_bytes(&self, bytes: &[u8]) -> Vec<f32> {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        let mut state = h ^ self.seed;
        let mut v: Vec<f64> = (0..self.dim)
            .map(|_| {
                state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
                let mut z = state;
                z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
                z ^= z >> 31;
                (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        } else if let Some(first) = v.first_mut() {
            *first = 1.0;
        }
        v.into_iter().map(|x| x as f32).collect()
    }
}

impl Embedder for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_text(&self, text: &str) -> Vec<f32> {
        self.embed_bytes(text.as_bytes())
    }
}

/// Dense row-major `f32` matrix with one row per id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub ids: Vec<String>,
    pub dims: usize,
    pub values: Vec<f32>,
}

const MAGIC: &[u8; 8] = b"BLEMB\0\0\x01";
const DTYPE_F32: u32 = 0;

impl EmbeddingMatrix {
    pub fn new(ids: Vec<String>, dims: usize, values: Vec<f32>) -> Result<Self, AnnotateError> {
        if values.len() != ids.len() * dims {
            return Err(AnnotateError::Format(format!(
                "{} values do not fill {} rows of {dims}",
                values.len(),
                ids.len()
            )));
        }
        let m = EmbeddingMatrix { ids, dims, values };
        if let Some(row) = (0..m.rows()).find(|&r| m.row(r).iter().any(|x| !x.is_finite())) {
            return Err(AnnotateError::NonFinite(row));
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.ids.len()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }

    /// Layout: 8-byte magic, `u64` N, `u64` D, `u32` dtype (0 = f32), then
    /// N·D little-endian `f32` values row-major, then a `u64` byte length and a
    /// JSON array of the N row ids.
    pub fn write(&self, path: &Path) -> Result<(), AnnotateError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&(self.rows() as u64).to_le_bytes())?;
        w.write_all(&(self.dims as u64).to_le_bytes())?;
        w.write_all(&DTYPE_F32.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        let ids = serde_json::to_vec(&self.ids).map_err(|e| AnnotateError::Format(e.to_string()))?;
        w.write_all(&(ids.len() as u64).to_le_bytes())?;
        w.write_all(&ids)?;
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, AnnotateError> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(AnnotateError::Format("bad magic".into()));
        }
        let mut u64buf = [0u8; 8];
        let mut read_u64 = |r: &mut BufReader<File>| -> Result<u64, AnnotateError> {
            r.read_exact(&mut u64buf)?;
            Ok(u64::from_le_bytes(u64buf))
        };
        let n = read_u64(&mut r)? as usize;
        let d = read_u64(&mut r)? as usize;
        let mut dtype = [0u8; 4];
        r.read_exact(&mut dtype)?;
        if u32::from_le_bytes(dtype) != DTYPE_F32 {
            return Err(AnnotateError::Format("unsupported dtype".into()));
        }
        let mut raw = vec![0u8; n * d * 4];
        r.read_exact(&mut raw)?;
        let values = raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        let len = read_u64(&mut r)? as usize;
        let mut ids = vec![0u8; len];
        r.read_exact(&mut ids)?;
        let ids: Vec<String> = serde_json::from_slice(&ids).map_err(|e| AnnotateError::Format(e.to_string()))?;
        if ids.len() != n {
            return Err(AnnotateError::Format(format!("{} ids for {n} rows", ids.len())));
        }
        EmbeddingMatrix::new(ids, d, values)
    }
}

/// Embed every pair in order. The first vector fixes the dimension.
pub fn embed<'a, I>(pairs: I, embedder: &dyn Embedder) -> Result<EmbeddingMatrix, AnnotateError>
where
    I: IntoIterator<Item = &'a PairRecord>,
{
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut dims = embedder.dim();
    for (row, pair) in pairs.into_iter().enumerate() {
        let v = embedder.embed_pair(pair);
        if row == 0 {
            dims = v.len();
        }
        if v.len() != dims {
            return Err(AnnotateError::DimensionMismatch { row, expected: dims, found: v.len() });
        }
        ids.push(pair.pair_id.clone());
        values.extend_from_slice(&v);
    }
    EmbeddingMatrix::new(ids, dims, values)
}
