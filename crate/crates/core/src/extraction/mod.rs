//! Extraction layer: typed artifacts from chunks, corroboration-based
//! confidence, and the expert validation workflow.

mod corroboration;
mod marker;

pub use corroboration::{content_tokens, fingerprint, CorroborationIndex, Fingerprint};
pub use marker::MarkerExtractor;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ids::{ArtifactId, PrincipalId};
use crate::ingestion::token_offsets;
use crate::model::{
    transition_state, ArtifactState, ArtifactType, AuditSubject, KnowledgeArtifact, ModelError,
    ProvenanceLink, SourceDocument, TranscriptChunk, ValidationAuthority,
};

pub const DEFAULT_VALIDATED_FLOOR: f64 = 0.90;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ExtractionError {
    #[error("extraction backend failed: {0}")]
    BackendFailure(String),
    #[error("statement fingerprint missing from the corroboration index")]
    NotIndexed,
    #[error("document has no chunks")]
    NotChunked,
    #[error("an Edit verdict needs non-empty edited text")]
    MissingEditText,
    #[error(transparent)]
    Transition(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractionHit {
    pub artifact_type: ArtifactType,
    pub statement: String,
    /// Character span within the chunk text.
    pub char_span: (usize, usize),
}

pub trait ExtractionBackend: Send + Sync {
    fn extract(&self, chunk_text: &str) -> Result<Vec<ExtractionHit>, ExtractionError>;
}

/// c(k) = k / (k + 1) for k supporting documents.
pub fn raw_confidence(k: usize) -> f64 {
    let k = k as f64;
    k / (k + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidencePolicy {
    pub validated_floor: f64,
}

impl Default for ConfidencePolicy {
    fn default() -> Self {
        Self {
            validated_floor: DEFAULT_VALIDATED_FLOOR,
        }
    }
}

impl ConfidencePolicy {
    pub fn effective(&self, raw: f64, state: ArtifactState) -> f64 {
        if state.is_validated() {
            raw.max(self.validated_floor)
        } else {
            raw
        }
    }
}

pub fn confidence_score(
    artifact: &KnowledgeArtifact,
    index: &CorroborationIndex,
    policy: &ConfidencePolicy,
) -> Result<f64, ExtractionError> {
    let k = index
        .support(&fingerprint(&artifact.statement))
        .ok_or(ExtractionError::NotIndexed)?;
    Ok(policy.effective(raw_confidence(k), artifact.state))
}

/// Runs the backend over every chunk and turns hits into `Extracted`
/// artifacts. Chunks overlap, so each hit is kept only by the chunk that owns
/// its starting token (`[start, next chunk start)`), and hits whose line does
/// not start a document line are dropped. Fingerprints are added to `index`
/// before confidences are scored.
pub fn extract_artifacts(
    doc: &SourceDocument,
    chunks: &[TranscriptChunk],
    backend: &dyn ExtractionBackend,
    index: &mut CorroborationIndex,
    mut mint: impl FnMut() -> (ArtifactId, DateTime<Utc>),
) -> Result<Vec<KnowledgeArtifact>, ExtractionError> {
    if chunks.is_empty() {
        return Err(ExtractionError::NotChunked);
    }
    let tokens = token_offsets(&doc.raw_text);
    let mut located = Vec::new();
    for (i, chunk) in chunks.iter().enumerate() {
        let owned_end = chunks.get(i + 1).map_or(usize::MAX, |c| c.token_span.0);
        let chunk_start = tokens
            .get(chunk.token_span.0)
            .map(|t| t.0)
            .ok_or_else(|| ExtractionError::BackendFailure("chunk outside document".into()))?;
        for hit in backend.extract(&chunk.text)? {
            let in_chunk = byte_offset(&chunk.text, hit.char_span.0).ok_or_else(|| {
                ExtractionError::BackendFailure("span outside chunk".into())
            })?;
            if hit.char_span.1 > chunk.text.chars().count() || hit.char_span.0 > hit.char_span.1 {
                return Err(ExtractionError::BackendFailure("span outside chunk".into()));
            }
            let abs = chunk_start + in_chunk;
            let line_start = doc.raw_text[..abs].rfind('\n').map_or(0, |p| p + 1);
            let Ok(line_token) = tokens.binary_search_by_key(&line_start, |t| t.0) else {
                // The line begins before this chunk's text.
                continue;
            };
            if line_token < chunk.token_span.0 || line_token >= owned_end {
                continue;
            }
            located.push((chunk, hit));
        }
    }
    for (_, hit) in &located {
        index.add(fingerprint(&hit.statement), doc.doc_id);
    }
    let policy = ConfidencePolicy::default();
    located
        .into_iter()
        .map(|(chunk, hit)| {
            let (artifact_id, created_at) = mint();
            let mut artifact = KnowledgeArtifact {
                artifact_id,
                expert_id: doc.expert_id,
                artifact_type: hit.artifact_type,
                statement: hit.statement,
                provenance: vec![ProvenanceLink {
                    doc_id: doc.doc_id,
                    chunk_id: chunk.chunk_id,
                    char_span: hit.char_span,
                }],
                confidence: 0.0,
                state: ArtifactState::Extracted,
                domain_tag: doc.domain_tag.clone(),
                created_at,
                validated_at: None,
                revision_of: None,
            };
            artifact.confidence = confidence_score(&artifact, index, &policy)?;
            Ok(artifact)
        })
        .collect()
}

fn byte_offset(text: &str, char_index: usize) -> Option<usize> {
    if char_index == text.chars().count() {
        return Some(text.len());
    }
    text.char_indices().nth(char_index).map(|(b, _)| b)
}

pub fn submit_for_validation(
    artifact: &KnowledgeArtifact,
    actor: &PrincipalId,
    authority: &dyn ValidationAuthority,
    now: DateTime<Utc>,
) -> Result<KnowledgeArtifact, ExtractionError> {
    Ok(transition_state(
        artifact,
        ArtifactState::PendingValidation,
        actor,
        authority,
        now,
    )?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Approve,
    Reject,
    Edit,
}

impl Verdict {
    pub fn is_correction(self) -> bool {
        matches!(self, Verdict::Reject | Verdict::Edit)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationDecision {
    pub artifact_id: ArtifactId,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edited_statement: Option<String>,
    pub reviewer: PrincipalId,
    pub decided_at: DateTime<Utc>,
}

/// Immutable decision history entry, kept for the correction-rate metric.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub subject: AuditSubject,
    pub verdict: Verdict,
    pub reviewer: String,
    pub decided_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revision: Option<AuditSubject>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionOutcome {
    /// The decided artifact in its new state.
    pub decided: KnowledgeArtifact,
    /// The Validated revision created by an Edit.
    pub revision: Option<KnowledgeArtifact>,
    pub record: DecisionRecord,
}

/// Applies a reviewer's verdict. An Edit rejects the original and creates a
/// Validated revision that copies its provenance; the revision's fingerprint
/// is registered under the same documents.
pub fn decide(
    artifact: &KnowledgeArtifact,
    decision: &ValidationDecision,
    authority: &dyn ValidationAuthority,
    policy: &ConfidencePolicy,
    index: &mut CorroborationIndex,
    revision_id: impl FnOnce() -> ArtifactId,
) -> Result<DecisionOutcome, ExtractionError> {
    let now = decision.decided_at;
    let reviewer = &decision.reviewer;
    let edited = match decision.verdict {
        Verdict::Edit => Some(
            decision
                .edited_statement
                .as_deref()
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .ok_or(ExtractionError::MissingEditText)?,
        ),
        _ => None,
    };
    let target = match decision.verdict {
        Verdict::Approve => ArtifactState::Validated,
        Verdict::Reject | Verdict::Edit => ArtifactState::Rejected,
    };
    let mut decided = transition_state(artifact, target, reviewer, authority, now)?;
    if target == ArtifactState::Validated {
        decided.confidence = confidence_score(&decided, index, policy)?;
    }
    let revision = match edited {
        Some(text) => {
            let fp = fingerprint(text);
            for doc in artifact.doc_ids() {
                index.add(fp.clone(), doc);
            }
            let mut rev = KnowledgeArtifact {
                artifact_id: revision_id(),
                statement: text.to_string(),
                state: ArtifactState::Validated,
                created_at: now,
                validated_at: Some(now),
                revision_of: Some(artifact.artifact_id),
                confidence: 0.0,
                ..artifact.clone()
            };
            rev.confidence = confidence_score(&rev, index, policy)?;
            Some(rev)
        }
        None => None,
    };
    let record = DecisionRecord {
        subject: AuditSubject::Artifact(artifact.artifact_id),
        verdict: decision.verdict,
        reviewer: reviewer.to_string(),
        decided_at: now,
        revision: revision
            .as_ref()
            .map(|r| AuditSubject::Artifact(r.artifact_id)),
    };
    Ok(DecisionOutcome {
        decided,
        revision,
        record,
    })
}

/// One line of the offline review export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueueRecord {
    pub artifact_id: ArtifactId,
    #[serde(rename = "type")]
    pub artifact_type: ArtifactType,
    pub statement: String,
    pub provenance: Vec<ProvenanceLink>,
    pub raw_confidence: f64,
}

impl QueueRecord {
    pub fn from_artifact(
        artifact: &KnowledgeArtifact,
        index: &CorroborationIndex,
    ) -> Result<Self, ExtractionError> {
        let k = index
            .support(&fingerprint(&artifact.statement))
            .ok_or(ExtractionError::NotIndexed)?;
        Ok(Self {
            artifact_id: artifact.artifact_id,
            artifact_type: artifact.artifact_type,
            statement: artifact.statement.clone(),
            provenance: artifact.provenance.clone(),
            raw_confidence: raw_confidence(k),
        })
    }
}

/// Serializes records as one JSON object per line.
pub fn export_jsonl(records: &[QueueRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("plain data"));
        out.push('\n');
    }
    out
}

pub fn import_jsonl(text: &str) -> Result<Vec<QueueRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::{ChunkId, DocId, ExpertId};
    use crate::ingestion::{chunk, ChunkParams};
    use crate::model::{Modality, OwnerOnly};
    use chrono::{NaiveDate, TimeZone};
    use proptest::prelude::*;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2026, 3, 1, 9, 0, 0).unwrap()
    }

    fn doc(text: &str, params: ChunkParams) -> (SourceDocument, Vec<TranscriptChunk>) {
        let d = SourceDocument {
            doc_id: DocId::from_u128(1),
            expert_id: ExpertId::from_u128(2),
            modality: Modality::Corpus,
            capture_date: NaiveDate::from_ymd_opt(2025, 1, 1).unwrap(),
            domain_tag: "grid".into(),
            raw_text: text.to_string(),
            original_byte_hash: 0,
            ingest_time: t0(),
        };
        let chunks = chunk(text, params)
            .unwrap()
            .into_iter()
            .map(|c| TranscriptChunk {
                chunk_id: ChunkId::from_u128(100 + c.seq as u128),
                doc_id: d.doc_id,
                seq: c.seq,
                token_span: (c.start_token, c.end_token),
                text: c.text,
            })
            .collect();
        (d, chunks)
    }

    fn minter() -> impl FnMut() -> (ArtifactId, DateTime<Utc>) {
        let mut n = 0u128;
        move || {
            n += 1;
            (ArtifactId::from_u128(n), t0() + chrono::Duration::seconds(n as i64))
        }
    }

    #[test]
    fn raw_confidence_values() {
        assert_eq!(raw_confidence(1), 0.5);
        assert_eq!(raw_confidence(3), 0.75);
    }

    #[test]
    fn floor_applies_only_when_validated() {
        let p = ConfidencePolicy::default();
        assert_eq!(p.effective(0.5, ArtifactState::Extracted), 0.5);
        assert_eq!(p.effective(0.5, ArtifactState::Validated), 0.90);
        assert_eq!(p.effective(0.95, ArtifactState::Indexed), 0.95);
    }

    #[test]
    fn extracts_typed_artifacts_with_provenance() {
        let (d, chunks) = doc("CLAIM: x\nCLAIM: y\nHEURISTIC: z", ChunkParams::default());
        let mut idx = CorroborationIndex::default();
        let arts = extract_artifacts(&d, &chunks, &MarkerExtractor, &mut idx, minter()).unwrap();
        assert_eq!(arts.len(), 3);
        assert_eq!(arts[2].artifact_type, ArtifactType::DecisionHeuristic);
        assert!(arts.iter().all(|a| a.state == ArtifactState::Extracted));
        assert!(arts.iter().all(|a| a.confidence == 0.5));
        assert_eq!(arts[1].provenance[0].char_span, (16, 17));
    }

    #[test]
    fn overlap_does_not_duplicate() {
        // window 6 / overlap 3: every marker line lands in two chunks.
        let text = "CLAIM: a b\nHEURISTIC: c d\nANOMALY: e f\nPRACTICE: g h\nfiller words end";
        let (d, chunks) = doc(text, ChunkParams::new(6, 3).unwrap());
        assert!(chunks.len() > 3);
        let mut idx = CorroborationIndex::default();
        let arts = extract_artifacts(&d, &chunks, &MarkerExtractor, &mut idx, minter()).unwrap();
        let statements: Vec<&str> = arts.iter().map(|a| a.statement.as_str()).collect();
        assert_eq!(statements, vec!["a b", "c d", "e f", "g h"]);
    }

    #[test]
    fn chunk_starting_mid_line_is_not_a_marker() {
        // The second chunk starts at "CLAIM:", which is not a line start in the document.
        let text = "note CLAIM: fake\nCLAIM: real";
        let (d, chunks) = doc(text, ChunkParams::new(2, 1).unwrap());
        assert!(chunks.iter().any(|c| c.text.starts_with("CLAIM: fake")));
        let mut idx = CorroborationIndex::default();
        let arts = extract_artifacts(&d, &chunks, &MarkerExtractor, &mut idx, minter()).unwrap();
        let statements: Vec<&str> = arts.iter().map(|a| a.statement.as_str()).collect();
        assert_eq!(statements, vec!["real"]);
    }

    #[test]
    fn corroboration_raises_confidence() {
        let mut idx = CorroborationIndex::default();
        for i in 10..13 {
            idx.add(fingerprint("Trip the breaker"), DocId::from_u128(i));
        }
        let (d, chunks) = doc("CLAIM: trip the BREAKER", ChunkParams::default());
        let arts = extract_artifacts(&d, &chunks, &MarkerExtractor, &mut idx, minter()).unwrap();
        assert_eq!(arts[0].confidence, raw_confidence(4));
    }

    #[test]
    fn missing_fingerprint_is_not_indexed() {
        let (d, chunks) = doc("CLAIM: x", ChunkParams::default());
        let mut idx = CorroborationIndex::default();
        let arts = extract_artifacts(&d, &chunks, &MarkerExtractor, &mut idx, minter()).unwrap();
        let empty = CorroborationIndex::default();
        assert_eq!(
            confidence_score(&arts[0], &empty, &ConfidencePolicy::default()),
            Err(ExtractionError::NotIndexed)
        );
    }

    fn pending() -> (KnowledgeArtifact, CorroborationIndex) {
        let (d, chunks) = doc("CLAIM: seals leak when cold", ChunkParams::default());
        let mut idx = CorroborationIndex::default();
        let a = extract_artifacts(&d, &chunks, &MarkerExtractor, &mut idx, minter())
            .unwrap()
            .remove(0);
        let owner: PrincipalId = a.expert_id.into();
        let a = submit_for_validation(&a, &owner, &OwnerOnly, t0()).unwrap();
        (a, idx)
    }

    fn decision(a: &KnowledgeArtifact, verdict: Verdict, text: Option<&str>) -> ValidationDecision {
        ValidationDecision {
            artifact_id: a.artifact_id,
            verdict,
            edited_statement: text.map(String::from),
            reviewer: a.expert_id.into(),
            decided_at: t0(),
        }
    }

    #[test]
    fn double_submit_is_illegal() {
        let (a, _) = pending();
        let err = submit_for_validation(&a, &a.expert_id.into(), &OwnerOnly, t0());
        assert!(matches!(
            err,
            Err(ExtractionError::Transition(ModelError::IllegalTransition { .. }))
        ));
    }

    #[test]
    fn approve_validates_and_floors() {
        let (a, mut idx) = pending();
        let out = decide(
            &a,
            &decision(&a, Verdict::Approve, None),
            &OwnerOnly,
            &ConfidencePolicy::default(),
            &mut idx,
            || unreachable!(),
        )
        .unwrap();
        assert_eq!(out.decided.state, ArtifactState::Validated);
        assert_eq!(out.decided.validated_at, Some(t0()));
        assert_eq!(out.decided.confidence, 0.90);
        assert!(out.revision.is_none());
    }

    #[test]
    fn edit_rejects_and_revises() {
        let (a, mut idx) = pending();
        let out = decide(
            &a,
            &decision(&a, Verdict::Edit, Some("Seals leak below 5C")),
            &OwnerOnly,
            &ConfidencePolicy::default(),
            &mut idx,
            || ArtifactId::from_u128(999),
        )
        .unwrap();
        assert_eq!(out.decided.state, ArtifactState::Rejected);
        let rev = out.revision.unwrap();
        assert_eq!(rev.state, ArtifactState::Validated);
        assert_eq!(rev.revision_of, Some(a.artifact_id));
        assert_eq!(rev.provenance, a.provenance);
        assert_eq!(rev.statement, "Seals leak below 5C");
        assert_eq!(rev.confidence, 0.90);
        assert_eq!(out.record.verdict, Verdict::Edit);
    }

    #[test]
    fn edit_needs_text() {
        let (a, mut idx) = pending();
        let err = decide(
            &a,
            &decision(&a, Verdict::Edit, Some("  ")),
            &OwnerOnly,
            &ConfidencePolicy::default(),
            &mut idx,
            || ArtifactId::from_u128(1),
        );
        assert_eq!(err.unwrap_err(), ExtractionError::MissingEditText);
    }

    #[test]
    fn non_owner_cannot_decide() {
        let (a, mut idx) = pending();
        let mut d = decision(&a, Verdict::Approve, None);
        d.reviewer = PrincipalId::new("eng-7");
        let err = decide(&a, &d, &OwnerOnly, &ConfidencePolicy::default(), &mut idx, || {
            ArtifactId::from_u128(1)
        });
        assert!(matches!(
            err,
            Err(ExtractionError::Transition(ModelError::Unauthorized { .. }))
        ));
    }

    #[test]
    fn queue_record_schema_is_exact() {
        let (a, idx) = pending();
        let rec = QueueRecord::from_artifact(&a, &idx).unwrap();
        let line = export_jsonl(std::slice::from_ref(&rec));
        let value: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        let keys: Vec<&String> = value.as_object().unwrap().keys().collect();
        assert_eq!(
            keys,
            vec!["artifact_id", "provenance", "raw_confidence", "statement", "type"]
        );
        assert_eq!(import_jsonl(&line).unwrap(), vec![rec]);
        assert!(import_jsonl(r#"{"artifact_id":"x","extra":1}"#).is_err());
    }

    proptest! {
        #[test]
        fn confidence_is_increasing_and_bounded(k in 1usize..10_000) {
            let c = raw_confidence(k);
            prop_assert!((0.5..1.0).contains(&c));
            prop_assert!(raw_confidence(k + 1) > c);
        }
    }
}
