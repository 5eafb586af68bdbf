//! Feature cache records.
//!
//! Layout (little endian):
//!
//! ```text
//! magic "RAFV" | version u8 | config hash [32] | header len u32 | header JSON
//! | rows u32 | cols u32 | channels u32 | rows·cols·channels × f32 (row-major, channel innermost)
//! ```
//!
//! The JSON header carries the clip id and an opaque provenance value.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureVolume, N_CHANNELS};
use crate::error::{Error, Result};
use crate::FEATURE_CACHE_FORMAT_VERSION;

const MAGIC: &[u8; 4] = b"RAFV";

pub type ConfigHash = [u8; 32];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordHeader {
    pub clip_id: String,
    #[serde(default)]
    pub provenance: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheRecord {
    pub config_hash: ConfigHash,
    pub header: RecordHeader,
    pub volume: FeatureVolume,
}

pub fn encode_record(record: &CacheRecord) -> Vec<u8> {
    let header = serde_json::to_vec(&record.header).expect("record header serialises");
    let [rows, cols, ch] = record.volume.shape();
    let mut out = Vec::with_capacity(4 + 1 + 32 + 4 + header.len() + 12 + 4 * rows * cols * ch);
    out.extend_from_slice(MAGIC);
    out.push(FEATURE_CACHE_FORMAT_VERSION);
    out.extend_from_slice(&record.config_hash);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for d in [rows, cols, ch] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in record.volume.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Corrupt("feature record truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn decode_record(bytes: &[u8]) -> Result<CacheRecord> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Corrupt("not a feature cache record".into()));
    }
    let version = r.take(1)?[0];
    if version != FEATURE_CACHE_FORMAT_VERSION {
        return Err(Error::Corrupt(format!(
            "feature record version {version}, expected {FEATURE_CACHE_FORMAT_VERSION}"
        )));
    }
    let mut config_hash = [0u8; 32];
    config_hash.copy_from_slice(r.take(32)?);
    let header_len = r.u32()? as usize;
    let header: RecordHeader = serde_json::from_slice(r.take(header_len)?)
        .map_err(|e| Error::Corrupt(format!("feature record header: {e}")))?;
    let (rows, cols, ch) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    if ch != N_CHANNELS {
        return Err(Error::Corrupt(format!("feature record has {ch} channels")));
    }
    let n = rows
        .checked_mul(cols)
        .and_then(|x| x.checked_mul(ch))
        .ok_or_else(|| Error::Corrupt("feature record shape overflows".into()))?;
    let raw = r.take(n * 4)?;
    let data = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    if r.pos != bytes.len() {
        return Err(Error::Corrupt("trailing bytes after feature record".into()));
    }
    Ok(CacheRecord {
        config_hash,
        header,
        volume: FeatureVolume::from_vec(rows, cols, data)?,
    })
}

pub fn write_record(path: impl AsRef<Path>, record: &CacheRecord) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_record(record)).map_err(|e| Error::io(path, e))
}

pub fn read_record(path: impl AsRef<Path>) -> Result<CacheRecord> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_record(&bytes)
}

/// Reads a record and refuses it unless it was produced under `expected` config.
pub fn read_record_checked(path: impl AsRef<Path>, expected: &ConfigHash) -> Result<CacheRecord> {
    let path = path.as_ref();
    let record = read_record(path)?;
    if &record.config_hash != expected {
        return Err(Error::StaleCache(format!(
            "{} was built with a different configuration; re-run `features`",
            path.display()
        )));
    }
    Ok(record)
}
