//! Domain types shared by every layer, and the artifact lifecycle.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::ids::{ArtifactId, ChunkId, DocId, ExpertId, PrincipalId};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("invalid domain tag {0:?}: tags match [a-z0-9_-]+")]
    InvalidTag(String),
    #[error("an expert needs at least one domain tag")]
    NoDomainTags,
    #[error("illegal transition {from} -> {to}")]
    IllegalTransition { from: ArtifactState, to: ArtifactState },
    #[error("{actor} may not move artifacts of expert {expert} to {to}")]
    Unauthorized {
        actor: PrincipalId,
        expert: ExpertId,
        to: ArtifactState,
    },
    #[error("unknown {0}")]
    UnknownVariant(String),
}

pub fn validate_tag(tag: &str) -> Result<(), ModelError> {
    let ok = !tag.is_empty()
        && tag
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_' || b == b'-');
    if ok {
        Ok(())
    } else {
        Err(ModelError::InvalidTag(tag.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertProfile {
    pub expert_id: ExpertId,
    pub display_name: String,
    pub domain_tags: BTreeSet<String>,
    pub created_at: DateTime<Utc>,
    /// Set when the profile has been reduced to a content-free stub.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub erased_at: Option<DateTime<Utc>>,
}

impl ExpertProfile {
    pub fn new(
        expert_id: ExpertId,
        display_name: impl Into<String>,
        domain_tags: impl IntoIterator<Item = String>,
        created_at: DateTime<Utc>,
    ) -> Result<Self, ModelError> {
        let domain_tags: BTreeSet<String> = domain_tags.into_iter().collect();
        if domain_tags.is_empty() {
            return Err(ModelError::NoDomainTags);
        }
        for tag in &domain_tags {
            validate_tag(tag)?;
        }
        Ok(Self {
            expert_id,
            display_name: display_name.into(),
            domain_tags,
            created_at,
            erased_at: None,
        })
    }

    /// The tag used for artifacts whose document does not name one.
    pub fn primary_tag(&self) -> Option<&str> {
        self.domain_tags.iter().next().map(String::as_str)
    }

    pub fn is_erased(&self) -> bool {
        self.erased_at.is_some()
    }

    pub fn into_stub(self, at: DateTime<Utc>) -> Self {
        Self {
            expert_id: self.expert_id,
            display_name: String::new(),
            domain_tags: BTreeSet::new(),
            created_at: self.created_at,
            erased_at: Some(at),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Modality {
    Interview,
    ThinkAloud,
    Corpus,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Interview, Modality::ThinkAloud, Modality::Corpus];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Interview => "Interview",
            Modality::ThinkAloud => "ThinkAloud",
            Modality::Corpus => "Corpus",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', '_', ' '], "").as_str() {
            "interview" => Ok(Modality::Interview),
            "thinkaloud" => Ok(Modality::ThinkAloud),
            "corpus" => Ok(Modality::Corpus),
            _ => Err(ModelError::UnknownVariant(format!("modality {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDocument {
    pub doc_id: DocId,
    pub expert_id: ExpertId,
    pub modality: Modality,
    pub capture_date: NaiveDate,
    /// Domain tag inherited by every artifact extracted from this document.
    pub domain_tag: String,
    /// Normalized, PII-scrubbed text.
    pub raw_text: String,
    /// FNV-1a 64 of the bytes as uploaded, before scrubbing.
    pub original_byte_hash: u64,
    pub ingest_time: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptChunk {
    pub chunk_id: ChunkId,
    pub doc_id: DocId,
    pub seq: usize,
    /// Half-open token range within the document.
    pub token_span: (usize, usize),
    pub text: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ArtifactType {
    FactualClaim,
    DecisionHeuristic,
    AnomalyPattern,
    BestPractice,
}

impl ArtifactType {
    pub const ALL: [ArtifactType; 4] = [
        ArtifactType::FactualClaim,
        ArtifactType::DecisionHeuristic,
        ArtifactType::AnomalyPattern,
        ArtifactType::BestPractice,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ArtifactType::FactualClaim => "FactualClaim",
            ArtifactType::DecisionHeuristic => "DecisionHeuristic",
            ArtifactType::AnomalyPattern => "AnomalyPattern",
            ArtifactType::BestPractice => "BestPractice",
        }
    }
}

impl fmt::Display for ArtifactType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArtifactType {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ArtifactType::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ModelError::UnknownVariant(format!("artifact type {s:?}")))
    }
}

/// Points at the exact characters of a chunk an artifact was taken from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProvenanceLink {
    pub doc_id: DocId,
    pub chunk_id: ChunkId,
    /// Half-open range of character (not byte) offsets into the chunk text.
    pub char_span: (usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ArtifactState {
    Extracted,
    PendingValidation,
    Validated,
    Rejected,
    Indexed,
    Erased,
}

impl ArtifactState {
    pub const ALL: [ArtifactState; 6] = [
        ArtifactState::Extracted,
        ArtifactState::PendingValidation,
        ArtifactState::Validated,
        ArtifactState::Rejected,
        ArtifactState::Indexed,
        ArtifactState::Erased,
    ];

    pub fn can_transition_to(self, target: ArtifactState) -> bool {
        use ArtifactState::*;
        match (self, target) {
            (Erased, _) => false,
            (_, Erased) => true,
            (Extracted, PendingValidation) => true,
            (PendingValidation, Validated | Rejected) => true,
            (Validated, Indexed) => true,
            _ => false,
        }
    }

    /// States whose confidence carries the post-validation floor.
    pub fn is_validated(self) -> bool {
        matches!(self, ArtifactState::Validated | ArtifactState::Indexed)
    }
}

impl fmt::Display for ArtifactState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeArtifact {
    pub artifact_id: ArtifactId,
    pub expert_id: ExpertId,
    pub artifact_type: ArtifactType,
    pub statement: String,
    pub provenance: Vec<ProvenanceLink>,
    pub confidence: f64,
    pub state: ArtifactState,
    pub domain_tag: String,
    pub created_at: DateTime<Utc>,
    pub validated_at: Option<DateTime<Utc>>,
    pub revision_of: Option<ArtifactId>,
}

impl KnowledgeArtifact {
    pub fn primary_doc(&self) -> DocId {
        self.provenance[0].doc_id
    }

    pub fn doc_ids(&self) -> BTreeSet<DocId> {
        self.provenance.iter().map(|p| p.doc_id).collect()
    }
}

/// Who besides the originating expert may validate or reject an artifact.
pub trait ValidationAuthority {
    fn may_decide(&self, actor: &PrincipalId, expert: &ExpertId) -> bool;
}

/// Only the originating expert decides.
pub struct OwnerOnly;

impl ValidationAuthority for OwnerOnly {
    fn may_decide(&self, actor: &PrincipalId, expert: &ExpertId) -> bool {
        actor.as_str() == expert.to_string()
    }
}

impl ValidationAuthority for BTreeMap<ExpertId, BTreeSet<PrincipalId>> {
    fn may_decide(&self, actor: &PrincipalId, expert: &ExpertId) -> bool {
        OwnerOnly.may_decide(actor, expert)
            || self.get(expert).is_some_and(|d| d.contains(actor))
    }
}

/// Moves an artifact along one legal edge of the lifecycle. The caller is
/// responsible for appending the audit entry.
pub fn transition_state(
    artifact: &KnowledgeArtifact,
    target: ArtifactState,
    actor: &PrincipalId,
    authority: &dyn ValidationAuthority,
    now: DateTime<Utc>,
) -> Result<KnowledgeArtifact, ModelError> {
    if !artifact.state.can_transition_to(target) {
        return Err(ModelError::IllegalTransition {
            from: artifact.state,
            to: target,
        });
    }
    if matches!(target, ArtifactState::Validated | ArtifactState::Rejected)
        && !authority.may_decide(actor, &artifact.expert_id)
    {
        return Err(ModelError::Unauthorized {
            actor: actor.clone(),
            expert: artifact.expert_id,
            to: target,
        });
    }
    let mut next = artifact.clone();
    next.state = target;
    if target == ArtifactState::Validated {
        next.validated_at = Some(now);
    }
    Ok(next)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditSubject {
    Artifact(ArtifactId),
    /// Job-salted digest left behind after erasure.
    Tombstone(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub seq: u64,
    pub at: DateTime<Utc>,
    pub subject: AuditSubject,
    /// `None` records creation directly into `to`.
    pub from: Option<ArtifactState>,
    pub to: ArtifactState,
    pub actor: String,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum HistoryViolation {
    #[error("entry {seq}: {subject:?} recorded from {recorded:?} but replay has {replayed:?}")]
    StateMismatch {
        seq: u64,
        subject: AuditSubject,
        recorded: Option<ArtifactState>,
        replayed: Option<ArtifactState>,
    },
    #[error("entry {seq}: illegal edge {from} -> {to}")]
    IllegalEdge {
        seq: u64,
        from: ArtifactState,
        to: ArtifactState,
    },
    #[error("entry {seq}: {subject:?} indexed without a prior validation")]
    IndexedWithoutValidation { seq: u64, subject: AuditSubject },
    #[error("entry {seq}: sequence numbers out of order")]
    OutOfOrder { seq: u64 },
}

/// Append-only lifecycle log.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditLog {
    entries: Vec<AuditEntry>,
}

impl AuditLog {
    pub fn entries(&self) -> &[AuditEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn record(
        &mut self,
        at: DateTime<Utc>,
        artifact: ArtifactId,
        from: Option<ArtifactState>,
        to: ArtifactState,
        actor: &PrincipalId,
    ) {
        let seq = self.entries.len() as u64;
        self.entries.push(AuditEntry {
            seq,
            at,
            subject: AuditSubject::Artifact(artifact),
            from,
            to,
            actor: actor.to_string(),
        });
    }

    /// Replaces identifying fields of matching entries with digests. Returns
    /// the number of entries rewritten.
    pub fn tombstone(
        &mut self,
        erased: &BTreeSet<ArtifactId>,
        actor: &str,
        digest: impl Fn(&str) -> String,
    ) -> usize {
        let mut rewritten = 0;
        for entry in &mut self.entries {
            let mut touched = false;
            if let AuditSubject::Artifact(id) = entry.subject {
                if erased.contains(&id) {
                    entry.subject = AuditSubject::Tombstone(digest(&id.to_string()));
                    touched = true;
                }
            }
            if entry.actor == actor {
                entry.actor = format!("tombstone:{}", digest(actor));
                touched = true;
            }
            rewritten += usize::from(touched);
        }
        rewritten
    }

    /// Replays the state machine over the whole log.
    pub fn verify_history(&self) -> Result<(), HistoryViolation> {
        let mut current: BTreeMap<&AuditSubject, ArtifactState> = BTreeMap::new();
        let mut validated: BTreeSet<&AuditSubject> = BTreeSet::new();
        for (i, entry) in self.entries.iter().enumerate() {
            if entry.seq != i as u64 {
                return Err(HistoryViolation::OutOfOrder { seq: entry.seq });
            }
            let replayed = current.get(&entry.subject).copied();
            if replayed != entry.from {
                return Err(HistoryViolation::StateMismatch {
                    seq: entry.seq,
                    subject: entry.subject.clone(),
                    recorded: entry.from,
                    replayed,
                });
            }
            if let Some(from) = entry.from {
                if !from.can_transition_to(entry.to) {
                    return Err(HistoryViolation::IllegalEdge {
                        seq: entry.seq,
                        from,
                        to: entry.to,
                    });
                }
            }
            match entry.to {
                ArtifactState::Validated => {
                    validated.insert(&entry.subject);
                }
                ArtifactState::Indexed if !validated.contains(&entry.subject) => {
                    return Err(HistoryViolation::IndexedWithoutValidation {
                        seq: entry.seq,
                        subject: entry.subject.clone(),
                    });
                }
                _ => {}
            }
            current.insert(&entry.subject, entry.to);
        }
        Ok(())
    }
}

/// FNV-1a 64-bit hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}
