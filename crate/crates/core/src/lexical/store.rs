use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Bm25Params, LexicalError, LexicalIndex, SparseScoreMatrix, Vocabulary};

pub const FORMAT_VERSION: u32 = 1;
pub const VOCAB_FILE: &str = "vocab.json";
pub const MATRIX_FILE: &str = "matrix.bin";
pub const META_FILE: &str = "meta.json";

const MAGIC: &[u8; 8] = b"BLBM25\0\0";

#[derive(Serialize, Deserialize)]
struct Meta {
    version: u32,
    params: Bm25Params,
    n_docs: usize,
    n_terms: usize,
    nnz: usize,
    avg_doc_len: f64,
    doc_keys: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    min_df: usize,
}

// matrix.bin: magic, u32 version, u64 n_terms, u64 n_docs, u64 nnz, u32 crc32
// of the payload, then offsets (u64 × n_terms+1), doc ids (u32 × nnz) and
// scores (f32 × nnz). Little-endian throughout.
pub(super) fn save(index: &LexicalIndex, dir: &Path) -> Result<(), LexicalError> {
    std::fs::create_dir_all(dir)?;
    let m = &index.matrix;

    let mut payload = Vec::with_capacity(m.offsets.len() * 8 + m.nnz() * 8);
    for o in &m.offsets {
        payload.extend_from_slice(&o.to_le_bytes());
    }
    for d in &m.doc_ids {
        payload.extend_from_slice(&d.to_le_bytes());
    }
    for s in &m.scores {
        payload.extend_from_slice(&(*s as f32).to_le_bytes());
    }

    let mut out = BufWriter::new(File::create(dir.join(MATRIX_FILE))?);
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(m.n_terms() as u64).to_le_bytes())?;
    out.write_all(&(m.n_docs as u64).to_le_bytes())?;
    out.write_all(&(m.nnz() as u64).to_le_bytes())?;
    out.write_all(&crc32fast::hash(&payload).to_le_bytes())?;
    out.write_all(&payload)?;
    out.flush()?;

    let vocab = VocabFile {
        terms: index.vocabulary.terms.clone(),
        doc_freq: index.vocabulary.doc_freq.clone(),
        min_df: index.vocabulary.min_df,
    };
    std::fs::write(dir.join(VOCAB_FILE), serde_json::to_vec(&vocab)?)?;
    let meta = Meta {
        version: FORMAT_VERSION,
        params: index.params,
        n_docs: m.n_docs,
        n_terms: m.n_terms(),
        nnz: m.nnz(),
        avg_doc_len: index.avg_doc_len,
        doc_keys: index.doc_keys.clone(),
    };
    std::fs::write(dir.join(META_FILE), serde_json::to_vec_pretty(&meta)?)?;
    Ok(())
}

struct ChunkReader<R> {
    inner: R,
    crc: crc32fast::Hasher,
    buf: Vec<u8>,
    chunk: usize,
}

impl<R: Read> ChunkReader<R> {
    fn read_array<T, const W: usize>(&mut self, count: usize, decode: impl Fn([u8; W]) -> T) -> Result<Vec<T>, LexicalError> {
        let mut out = Vec::with_capacity(count);
        let mut left = count;
        while left > 0 {
            let take = left.min(self.chunk);
            self.buf.resize(take * W, 0);
            self.inner.read_exact(&mut self.buf).map_err(|e| truncated(e))?;
            self.crc.update(&self.buf);
            out.extend(self.buf.chunks_exact(W).map(|c| decode(c.try_into().unwrap())));
            left -= take;
        }
        Ok(out)
    }
}

fn truncated(e: std::io::Error) -> LexicalError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        LexicalError::Corrupt("matrix payload truncated".into())
    } else {
        LexicalError::Io(e)
    }
}

fn check_version(found: u32) -> Result<(), LexicalError> {
    if found != FORMAT_VERSION {
        return Err(LexicalError::VersionMismatch { found, expected: FORMAT_VERSION });
    }
    Ok(())
}

pub(super) fn load(dir: &Path, chunk_size: usize) -> Result<LexicalIndex, LexicalError> {
    let meta: Meta = serde_json::from_slice(&std::fs::read(dir.join(META_FILE))?)?;
    check_version(meta.version)?;
    let vocab: VocabFile = serde_json::from_slice(&std::fs::read(dir.join(VOCAB_FILE))?)?;

    let mut file = BufReader::new(File::open(dir.join(MATRIX_FILE))?);
    let mut header = [0u8; 8 + 4 + 8 * 3 + 4];
    file.read_exact(&mut header).map_err(truncated)?;
    if &header[..8] != MAGIC {
        return Err(LexicalError::Corrupt("bad matrix magic".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let u64_at = |i: usize| u64::from_le_bytes(header[i..i + 8].try_into().unwrap()) as usize;
    check_version(u32_at(8))?;
    let (n_terms, n_docs, nnz, stored) = (u64_at(12), u64_at(20), u64_at(28), u32_at(36));
    if n_terms != meta.n_terms || n_docs != meta.n_docs || nnz != meta.nnz || vocab.terms.len() != n_terms {
        return Err(LexicalError::Corrupt("matrix header disagrees with metadata".into()));
    }
    if meta.doc_keys.len() != n_docs {
        return Err(LexicalError::Corrupt("doc table length differs from n_docs".into()));
    }

    let mut reader = ChunkReader { inner: file, crc: crc32fast::Hasher::new(), buf: Vec::new(), chunk: chunk_size.max(1) };
    let offsets = reader.read_array(n_terms + 1, u64::from_le_bytes)?;
    let doc_ids = reader.read_array(nnz, u32::from_le_bytes)?;
    let scores = reader.read_array(nnz, |b| f32::from_le_bytes(b) as f64)?;
    let computed = reader.crc.finalize();
    if computed != stored {
        return Err(LexicalError::ChecksumMismatch { file: MATRIX_FILE, stored, computed });
    }

    let monotone = offsets.first() == Some(&0)
        && offsets.windows(2).all(|w| w[0] <= w[1])
        && offsets.last().copied() == Some(nnz as u64);
    if !monotone || doc_ids.iter().any(|&d| d as usize >= n_docs) {
        return Err(LexicalError::Corrupt("invalid column structure".into()));
    }

    Ok(LexicalIndex {
        vocabulary: Vocabulary::new(vocab.terms, vocab.doc_freq, vocab.min_df),
        matrix: SparseScoreMatrix { n_docs, offsets, doc_ids, scores },
        doc_keys: meta.doc_keys,
        params: meta.params,
        avg_doc_len: meta.avg_doc_len,
    })
}
