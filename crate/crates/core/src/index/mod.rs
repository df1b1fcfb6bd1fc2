//! Vector layer: embeddings, metadata-filtered exact k-NN, persistence.

mod embed;
pub mod file;
mod filter;
mod flat;

pub use embed::{mock_embed, EmbedError, EmbeddingBackend, HashingEmbedder, DEFAULT_DIMENSION};
pub use filter::{MetadataFilter, RecordMetadata};
pub use flat::{cosine, rank_order, EmbeddingRecord, FlatIndex, SearchHit};

use chrono::NaiveDate;

use crate::model::{ArtifactState, KnowledgeArtifact};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("vector dimension {got} does not match index dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("artifact is {0}, only Validated artifacts can be indexed")]
    NotValidated(ArtifactState),
    #[error("corrupt index file: {0}")]
    CorruptFile(String),
    #[error("index format version {found} unsupported (expected {supported})")]
    VersionMismatch { found: u16, supported: u16 },
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for IndexError {
    fn from(e: std::io::Error) -> Self {
        IndexError::Io(e.to_string())
    }
}

pub fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

/// Builds the stored record for an artifact. Indexed artifacts may be
/// re-embedded (replace semantics); anything else must be Validated.
pub fn record_for(
    artifact: &KnowledgeArtifact,
    capture_date: NaiveDate,
    embedder: &dyn EmbeddingBackend,
) -> Result<EmbeddingRecord, IndexError> {
    if !matches!(artifact.state, ArtifactState::Validated | ArtifactState::Indexed) {
        return Err(IndexError::NotValidated(artifact.state));
    }
    let vector = to_f32(&embedder.embed(&artifact.statement)?);
    Ok(EmbeddingRecord {
        artifact_id: artifact.artifact_id,
        vector,
        metadata: RecordMetadata {
            doc_id: artifact.primary_doc(),
            capture_date,
            artifact_type: artifact.artifact_type,
            confidence: artifact.confidence,
            domain_tag: artifact.domain_tag.clone(),
        },
    })
}
