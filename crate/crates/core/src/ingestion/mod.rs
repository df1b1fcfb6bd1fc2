//! Capture layer: sessions, upload parsing, and the normalize → scrub → chunk
//! pipeline.

mod chunk;
mod normalize;
mod pii;
mod transcription;

pub use chunk::{chunk, token_offsets, ChunkParams, ChunkSpan, DEFAULT_OVERLAP, DEFAULT_WINDOW};
pub use normalize::{normalize, normalize_bytes};
pub use pii::{scrub_pii, RedactionRule, RedactionRuleSet, ScrubOutcome};
pub use transcription::{
    SidecarTranscriber, TimedSegment, TimedText, TranscriptionBackend, TranscriptionError,
};

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::ids::{ConsentId, ExpertId, SessionId};
use crate::model::{fnv1a64, Modality};

pub const INTERVIEW_MINUTES: std::ops::RangeInclusive<u32> = 60..=90;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum IngestError {
    #[error("no active consent covers this capture")]
    ConsentMissing,
    #[error("consent does not cover modality {0}")]
    ConsentScopeViolation(Modality),
    #[error("interview sessions run 60-90 minutes, got {0}")]
    InvalidDuration(u32),
    #[error("input is not UTF-8 (valid up to byte {0})")]
    InvalidEncoding(usize),
    #[error("document is empty after normalization")]
    EmptyDocument,
    #[error("document bytes already ingested")]
    DuplicateDocument,
    #[error("overlap {overlap} must be smaller than window {window}")]
    BadWindow { window: usize, overlap: usize },
    #[error("bad upload header: {0}")]
    BadHeader(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureSession {
    pub session_id: SessionId,
    pub expert_id: ExpertId,
    pub modality: Modality,
    pub scheduled_minutes: u32,
    pub consent_id: ConsentId,
}

pub fn check_session_duration(modality: Modality, minutes: u32) -> Result<(), IngestError> {
    if modality == Modality::Interview && !INTERVIEW_MINUTES.contains(&minutes) {
        return Err(IngestError::InvalidDuration(minutes));
    }
    Ok(())
}

/// How an upload names its expert.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExpertRef {
    Id(ExpertId),
    Name(String),
}

impl std::str::FromStr for ExpertRef {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Ok(s.parse()
            .map(ExpertRef::Id)
            .unwrap_or_else(|_| ExpertRef::Name(s.to_string())))
    }
}

/// Front-matter of a corpus upload.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UploadHeader {
    pub expert: ExpertRef,
    pub modality: Modality,
    pub capture_date: NaiveDate,
    pub domain: Option<String>,
    pub session: Option<SessionId>,
}

/// Splits `key: value` header lines (ended by a blank line) from the body.
/// Returns the header and the untouched body bytes.
pub fn parse_upload(bytes: &[u8]) -> Result<(UploadHeader, &[u8]), IngestError> {
    let mut fields: BTreeMap<String, String> = BTreeMap::new();
    let mut pos = 0;
    loop {
        let rest = &bytes[pos..];
        let line_len = rest.iter().position(|&b| b == b'\n');
        let (raw_line, next) = match line_len {
            Some(n) => (&rest[..n], pos + n + 1),
            None => (rest, bytes.len()),
        };
        let line = std::str::from_utf8(raw_line)
            .map_err(|e| IngestError::InvalidEncoding(pos + e.valid_up_to()))?
            .trim_end_matches('\r');
        pos = next;
        if line.trim().is_empty() {
            break;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| IngestError::BadHeader(format!("expected `key: value`, got {line:?}")))?;
        let key = key.trim().to_ascii_lowercase();
        if !matches!(
            key.as_str(),
            "expert" | "modality" | "capture_date" | "domain" | "session"
        ) {
            return Err(IngestError::BadHeader(format!("unknown key {key:?}")));
        }
        if fields.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(IngestError::BadHeader(format!("duplicate key {key:?}")));
        }
        if line_len.is_none() {
            break;
        }
    }
    let take = |k: &str| {
        fields
            .get(k)
            .cloned()
            .ok_or_else(|| IngestError::BadHeader(format!("missing `{k}:`")))
    };
    let expert: ExpertRef = take("expert")?.parse().expect("infallible");
    let modality: Modality = take("modality")?
        .parse()
        .map_err(|e: crate::model::ModelError| IngestError::BadHeader(e.to_string()))?;
    let capture_date = NaiveDate::parse_from_str(&take("capture_date")?, "%Y-%m-%d")
        .map_err(|e| IngestError::BadHeader(format!("capture_date: {e}")))?;
    let session = match fields.get("session") {
        Some(s) => Some(
            s.parse()
                .map_err(|e: crate::ids::ParseIdError| IngestError::BadHeader(e.to_string()))?,
        ),
        None => None,
    };
    Ok((
        UploadHeader {
            expert,
            modality,
            capture_date,
            domain: fields.get("domain").cloned(),
            session,
        },
        &bytes[pos.min(bytes.len())..],
    ))
}

/// Output of the text pipeline, before identifiers are assigned.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreparedDocument {
    pub raw_text: String,
    pub original_byte_hash: u64,
    pub redactions: BTreeMap<String, usize>,
    pub chunks: Vec<ChunkSpan>,
}

impl PreparedDocument {
    /// Hash of the stored (scrubbed) content; equal inputs give equal hashes.
    pub fn content_hash(&self) -> u64 {
        fnv1a64(self.raw_text.as_bytes())
    }
}

/// Runs normalize → scrub_pii → chunk over the uploaded body bytes.
pub fn prepare_document(
    body: &[u8],
    rules: &RedactionRuleSet,
    params: ChunkParams,
) -> Result<PreparedDocument, IngestError> {
    let original_byte_hash = fnv1a64(body);
    let normalized = normalize_bytes(body)?;
    if normalized.trim().is_empty() {
        return Err(IngestError::EmptyDocument);
    }
    let scrubbed = scrub_pii(&normalized, rules);
    let chunks = chunk(&scrubbed.text, params)?;
    Ok(PreparedDocument {
        raw_text: scrubbed.text,
        original_byte_hash,
        redactions: scrubbed.counts,
        chunks,
    })
}
