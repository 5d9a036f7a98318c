//! On-disk layout, all integers little-endian:
//!
//! ```text
//! "SDIX" | version: u8 | header_len: u32 | header JSON
//!        | count * dimension f32 vectors
//!        | entries_len: u64 | entries JSON
//!        | SHA-256 of everything before it
//! ```

use std::io::Write;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{IndexEntry, IndexError, Metric, VectorIndex};

const MAGIC: &[u8; 4] = b"SDIX";
pub const FORMAT_VERSION: u8 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    version: u8,
    dimension: usize,
    metric: Metric,
    count: usize,
}

fn corrupt(msg: impl Into<String>) -> IndexError {
    IndexError::Corrupt(msg.into())
}

impl VectorIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&Header {
            version: FORMAT_VERSION,
            dimension: self.dimension,
            metric: self.metric,
            count: self.entries.len(),
        })
        .expect("header serializes");
        let entries = serde_json::to_vec(&self.entries).expect("entries serialize");

        let mut out = Vec::with_capacity(
            64 + header.len() + entries.len() + 4 * self.dimension * self.entries.len(),
        );
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for e in &self.entries {
            for x in &e.vector {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out.extend_from_slice(&(entries.len() as u64).to_le_bytes());
        out.extend_from_slice(&entries);
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IndexError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(corrupt("not an index file"));
        }
        let version = r.take(1)?[0];
        if version != FORMAT_VERSION {
            return Err(IndexError::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let body_len = bytes
            .len()
            .checked_sub(32)
            .ok_or_else(|| corrupt("truncated"))?;
        if Sha256::digest(&bytes[..body_len]).as_slice() != &bytes[body_len..] {
            return Err(corrupt("checksum mismatch"));
        }
        let r = &mut Reader {
            bytes: &bytes[..body_len],
            pos: 5,
        };

        let header_len = u32::from_le_bytes(r.array()?) as usize;
        let header: Header = serde_json::from_slice(r.take(header_len)?)
            .map_err(|e| corrupt(format!("header: {e}")))?;
        if header.version != version {
            return Err(corrupt("header version disagrees with the file"));
        }
        let floats = header
            .count
            .checked_mul(header.dimension)
            .ok_or_else(|| corrupt("vector block size overflows"))?;
        let raw = r.take(floats.checked_mul(4).ok_or_else(|| corrupt("vector block size overflows"))?)?;
        let entries_len = u64::from_le_bytes(r.array()?) as usize;
        let mut entries: Vec<IndexEntry> = serde_json::from_slice(r.take(entries_len)?)
            .map_err(|e| corrupt(format!("entries: {e}")))?;
        if r.pos != r.bytes.len() {
            return Err(corrupt("trailing bytes"));
        }
        if entries.len() != header.count {
            return Err(corrupt(format!(
                "header counts {} entries, table has {}",
                header.count,
                entries.len()
            )));
        }
        if header.dimension > 0 {
            for (e, chunk) in entries.iter_mut().zip(raw.chunks_exact(4 * header.dimension)) {
                e.vector = chunk
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().expect("4-byte chunk")))
                    .collect();
            }
        }
        Ok(VectorIndex {
            dimension: header.dimension,
            metric: header.metric,
            entries,
        })
    }

    /// Writes atomically: a temporary file in the target directory is
    /// renamed over `path`.
    pub fn save(&self, path: &FsPath) -> Result<(), IndexError> {
        write_atomic(path, &self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &FsPath) -> Result<Self, IndexError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// Replaces `path` with `data` via a temporary file and rename.
pub fn write_atomic(path: &FsPath, data: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => FsPath::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(data)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| corrupt("truncated"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], IndexError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
}
