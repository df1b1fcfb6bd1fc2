use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::evaluation::{InteractionLogEntry, ReviewSample, RunningMetrics, SurveyResponse};
use crate::extraction::{CorroborationIndex, DecisionRecord};
use crate::governance::{check_access, has_grant, AccessDecision, ConsentRecord, ErasureJob};
use crate::ids::{
    ArtifactId, ChunkId, ConsentId, DocId, ExpertId, JobId, PrincipalId, QueryId, SampleId,
    SessionId,
};
use crate::index::{FlatIndex, MetadataFilter, SearchHit};
use crate::ingestion::CaptureSession;
use crate::model::{AuditLog, ExpertProfile, KnowledgeArtifact, SourceDocument, TranscriptChunk};
use crate::query::{GroundedResponse, KnowledgeView, QueryError};

use super::auth::Principal;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlertKind {
    ErasureFailed,
    ErasureOverdue,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alert {
    pub at: DateTime<Utc>,
    pub kind: AlertKind,
    pub job_id: JobId,
    pub message: String,
}

/// Everything guarded by the single-writer lock.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct State {
    pub experts: BTreeMap<ExpertId, ExpertProfile>,
    pub principals: BTreeMap<String, Principal>,
    pub consents: BTreeMap<ConsentId, ConsentRecord>,
    pub sessions: BTreeMap<SessionId, CaptureSession>,
    pub documents: BTreeMap<DocId, SourceDocument>,
    pub chunks: BTreeMap<DocId, Vec<TranscriptChunk>>,
    pub extracted_docs: BTreeSet<DocId>,
    pub artifacts: BTreeMap<ArtifactId, KnowledgeArtifact>,
    pub corroboration: CorroborationIndex,
    pub decisions: Vec<DecisionRecord>,
    pub audit: AuditLog,
    pub jobs: BTreeMap<JobId, ErasureJob>,
    pub samples: BTreeMap<SampleId, ReviewSample>,
    pub surveys: Vec<SurveyResponse>,
    pub alerts: Vec<Alert>,
    #[serde(skip)]
    pub index: FlatIndex,
}

impl State {
    pub(crate) fn new(dimension: usize) -> Self {
        Self {
            index: FlatIndex::new(dimension),
            ..Default::default()
        }
    }

    pub fn chunk_count(&self, doc: &DocId) -> usize {
        self.chunks.get(doc).map_or(0, Vec::len)
    }

    pub fn find_chunk(&self, doc: &DocId, chunk: &ChunkId) -> Option<&TranscriptChunk> {
        self.chunks.get(doc)?.iter().find(|c| c.chunk_id == *chunk)
    }
}

/// Query log and response cache. Appended by readers, so it has its own
/// lock taken after the state lock.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct Journal {
    pub entries: Vec<InteractionLogEntry>,
    pub responses: BTreeMap<QueryId, GroundedResponse>,
    pub running: RunningMetrics,
}

pub(crate) struct StateView<'a> {
    pub state: &'a State,
    pub today: NaiveDate,
}

impl StateView<'_> {
    pub fn access_for(&self, principal: &PrincipalId, artifact: &KnowledgeArtifact) -> AccessDecision {
        check_access(
            principal,
            &artifact.expert_id,
            &artifact.domain_tag,
            self.state.consents.values(),
            self.today,
        )
    }
}

impl KnowledgeView for StateView<'_> {
    fn today(&self) -> NaiveDate {
        self.today
    }

    fn has_grant(&self, principal: &PrincipalId, tags: Option<&BTreeSet<String>>) -> bool {
        has_grant(principal, tags, self.state.consents.values(), self.today)
    }

    fn access(&self, principal: &PrincipalId, artifact: &KnowledgeArtifact) -> AccessDecision {
        self.access_for(principal, artifact)
    }

    fn artifact(&self, id: &ArtifactId) -> Option<&KnowledgeArtifact> {
        self.state.artifacts.get(id)
    }

    fn capture_date(&self, doc: &DocId) -> Option<NaiveDate> {
        self.state.documents.get(doc).map(|d| d.capture_date)
    }

    fn search(
        &self,
        vector: &[f32],
        k: usize,
        filter: &MetadataFilter,
        admit: &dyn Fn(&ArtifactId) -> bool,
    ) -> Result<Vec<SearchHit>, QueryError> {
        self.state
            .index
            .search_admitted(vector, k, filter, |id, _| admit(id))
            .map_err(|e| QueryError::Index(e.to_string()))
    }
}
