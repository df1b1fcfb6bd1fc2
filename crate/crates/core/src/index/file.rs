//! On-disk index format.
//!
//! ```text
//! "XMND"            4 bytes
//! version           u16 LE
//! dimension         u16 LE
//! record count      u64 LE
//! per record:
//!   artifact id     16 bytes (big-endian u128)
//!   vector          dimension x f32 LE
//!   metadata length u32 LE
//!   metadata        UTF-8 JSON of the five metadata fields
//! CRC-32C           u32 LE over every preceding byte
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::ids::ArtifactId;

use super::{EmbeddingRecord, FlatIndex, IndexError, RecordMetadata};

pub const MAGIC: &[u8; 4] = b"XMND";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 2 + 8;

pub fn encode(index: &FlatIndex) -> Result<Vec<u8>, IndexError> {
    let dimension = u16::try_from(index.dimension()).map_err(|_| IndexError::DimensionMismatch {
        expected: u16::MAX as usize,
        got: index.dimension(),
    })?;
    let mut out = Vec::with_capacity(HEADER_LEN + index.len() * (16 + 4 * index.dimension() + 128));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&dimension.to_le_bytes());
    out.extend_from_slice(&(index.len() as u64).to_le_bytes());
    for record in index.records() {
        out.extend_from_slice(&record.artifact_id.to_bytes());
        for x in &record.vector {
            out.extend_from_slice(&x.to_le_bytes());
        }
        let meta = serde_json::to_vec(&record.metadata).expect("plain data");
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
    }
    let crc = crc32c::crc32c(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
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
            .ok_or_else(|| IndexError::CorruptFile("record runs past end of payload".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], IndexError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
}

pub fn decode(bytes: &[u8]) -> Result<FlatIndex, IndexError> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(IndexError::CorruptFile("file shorter than header".into()));
    }
    if &bytes[..4] != MAGIC {
        return Err(IndexError::CorruptFile("bad magic".into()));
    }
    let (payload, trailer) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(trailer.try_into().expect("4 bytes"));
    if crc32c::crc32c(payload) != stored {
        return Err(IndexError::CorruptFile("checksum mismatch".into()));
    }
    let mut r = Reader {
        bytes: payload,
        pos: 4,
    };
    let version = u16::from_le_bytes(r.array()?);
    if version != FORMAT_VERSION {
        return Err(IndexError::VersionMismatch {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let dimension = usize::from(u16::from_le_bytes(r.array()?));
    let count = u64::from_le_bytes(r.array()?);
    let mut index = FlatIndex::new(dimension);
    for _ in 0..count {
        let artifact_id = ArtifactId::from_bytes(r.array()?);
        let raw = r.take(dimension.checked_mul(4).ok_or_else(|| {
            IndexError::CorruptFile("dimension overflow".into())
        })?)?;
        let vector = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let len = u32::from_le_bytes(r.array()?) as usize;
        let metadata: RecordMetadata = serde_json::from_slice(r.take(len)?)
            .map_err(|e| IndexError::CorruptFile(format!("metadata: {e}")))?;
        if index.contains(&artifact_id) {
            return Err(IndexError::CorruptFile(format!("duplicate record {artifact_id}")));
        }
        index.upsert(EmbeddingRecord {
            artifact_id,
            vector,
            metadata,
        })?;
    }
    if r.pos != payload.len() {
        return Err(IndexError::CorruptFile("trailing bytes after records".into()));
    }
    Ok(index)
}

/// Writes through a sibling temp file and renames over `path`.
pub fn flush(index: &FlatIndex, path: &Path) -> Result<(), IndexError> {
    let bytes = encode(index)?;
    let tmp = path.with_extension("xmnd.tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<FlatIndex, IndexError> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::DocId;
    use crate::index::MetadataFilter;
    use crate::model::ArtifactType;
    use chrono::NaiveDate;

    fn sample(n: u128) -> FlatIndex {
        let mut idx = FlatIndex::new(3);
        for i in 0..n {
            idx.upsert(EmbeddingRecord {
                artifact_id: ArtifactId::from_u128(i * 7919 + 1),
                vector: vec![i as f32 * 0.1, -0.25, 1.0 / (i as f32 + 3.0)],
                metadata: RecordMetadata {
                    doc_id: DocId::from_u128(i),
                    capture_date: NaiveDate::from_ymd_opt(2024, 1, 1 + i as u32 % 28).unwrap(),
                    artifact_type: ArtifactType::ALL[i as usize % 4],
                    confidence: 1.0 / 3.0 + i as f64 * 1e-3,
                    domain_tag: format!("t{}", i % 3),
                },
            })
            .unwrap();
        }
        idx
    }

    #[test]
    fn empty_round_trip() {
        let idx = FlatIndex::new(64);
        let bytes = encode(&idx).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 4);
        assert_eq!(decode(&bytes).unwrap(), idx);
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&sample(2)).unwrap();
        assert_eq!(&bytes[..4], b"XMND");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u16::from_le_bytes([bytes[6], bytes[7]]), 3);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 2);
        assert_eq!(&bytes[16..32], &ArtifactId::from_u128(1).to_bytes());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let idx = sample(50);
        let back = decode(&encode(&idx).unwrap()).unwrap();
        assert_eq!(back, idx);
        for (a, b) in idx.records().zip(back.records()) {
            let bits_a: Vec<u32> = a.vector.iter().map(|x| x.to_bits()).collect();
            let bits_b: Vec<u32> = b.vector.iter().map(|x| x.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
            assert_eq!(a.metadata.confidence.to_bits(), b.metadata.confidence.to_bits());
        }
        let q = [0.3f32, 0.1, -0.2];
        assert_eq!(
            idx.search(&q, 10, &MetadataFilter::default()).unwrap(),
            back.search(&q, 10, &MetadataFilter::default()).unwrap()
        );
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let bytes = encode(&sample(5)).unwrap();
        for cut in [0, 3, 10, bytes.len() / 2, bytes.len() - 1] {
            assert!(
                matches!(decode(&bytes[..cut]), Err(IndexError::CorruptFile(_))),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn flipped_bit_is_corrupt() {
        let mut bytes = encode(&sample(5)).unwrap();
        bytes[40] ^= 1;
        assert!(matches!(decode(&bytes), Err(IndexError::CorruptFile(_))));
        let mut bad_magic = encode(&sample(1)).unwrap();
        bad_magic[0] = b'Y';
        assert!(matches!(decode(&bad_magic), Err(IndexError::CorruptFile(_))));
    }

    #[test]
    fn other_version_is_rejected() {
        let mut bytes = encode(&sample(1)).unwrap();
        bytes[4] = 2;
        let n = bytes.len();
        let crc = crc32c::crc32c(&bytes[..n - 4]);
        bytes[n - 4..].copy_from_slice(&crc.to_le_bytes());
        assert_eq!(
            decode(&bytes),
            Err(IndexError::VersionMismatch { found: 2, supported: 1 })
        );
    }

    #[test]
    fn flush_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.xmnd");
        let idx = sample(20);
        flush(&idx, &path).unwrap();
        assert_eq!(load(&path).unwrap(), idx);
        assert!(!path.with_extension("xmnd.tmp").exists());
    }
}
