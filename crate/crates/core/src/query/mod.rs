//! Retrieval-augmented answering with citation markers and disclosure.

mod context;
mod validate;

pub use context::{assemble_context, ContextCandidate, ContextItem, PromptContext};
pub use validate::{split_sentences, validate_citations, CitationViolation};

use std::collections::BTreeSet;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::governance::AccessDecision;
use crate::ids::{ArtifactId, DocId, PrincipalId, QueryId};
use crate::index::{to_f32, EmbedError, EmbeddingBackend, MetadataFilter, SearchHit};
use crate::model::{ArtifactState, ArtifactType, KnowledgeArtifact};

pub const NO_GROUNDING_NOTICE: &str =
    "No grounded answer available from the captured knowledge base.";
pub const DEFAULT_K: usize = 8;
pub const DEFAULT_TOKEN_BUDGET: usize = 2048;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("principal is outside every consent scope")]
    Forbidden,
    #[error("question is empty")]
    EmptyQuestion,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("unknown query {0}")]
    UnknownQuery(QueryId),
    #[error("resolution flag already set for query {0}")]
    AlreadySet(QueryId),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("generation backend failed: {0}")]
    Generation(String),
    #[error("index: {0}")]
    Index(String),
    #[error("store inconsistency: {0}")]
    Inconsistent(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: QueryId,
    pub principal: PrincipalId,
    pub question: String,
    #[serde(default)]
    pub filter: MetadataFilter,
    pub k: usize,
    pub asked_at: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Citation {
    pub marker: usize,
    pub artifact_id: ArtifactId,
    pub artifact_type: ArtifactType,
    pub statement: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disclosure {
    pub marker: usize,
    pub artifact_id: ArtifactId,
    pub confidence: f64,
    pub capture_date: NaiveDate,
    pub domain_tag: String,
    pub doc_id: DocId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundedResponse {
    pub query_id: QueryId,
    pub answer: String,
    pub citations: Vec<Citation>,
    pub disclosure: Vec<Disclosure>,
    pub resolved_flag: Option<bool>,
    pub latency_ms: u64,
}

impl GroundedResponse {
    pub fn ungrounded(query_id: QueryId) -> Self {
        Self {
            query_id,
            answer: NO_GROUNDING_NOTICE.to_string(),
            citations: Vec::new(),
            disclosure: Vec::new(),
            resolved_flag: None,
            latency_ms: 0,
        }
    }

    pub fn is_grounded(&self) -> bool {
        !self.citations.is_empty()
    }
}

pub trait GenerationBackend: Send + Sync {
    fn generate(&self, question: &str, context: &PromptContext) -> Result<String, QueryError>;
}

/// Extractive generator: one cited sentence per context item.
#[derive(Clone, Copy, Debug, Default)]
pub struct MockGenerator;

impl GenerationBackend for MockGenerator {
    fn generate(&self, question: &str, context: &PromptContext) -> Result<String, QueryError> {
        Ok(mock_generate(question, context))
    }
}

pub fn mock_generate(_question: &str, context: &PromptContext) -> String {
    if context.items.is_empty() {
        return NO_GROUNDING_NOTICE.to_string();
    }
    context
        .items
        .iter()
        .enumerate()
        .map(|(i, item)| {
            let s = item.statement.trim_end_matches(['.', '!', '?']).trim_end();
            format!("{s} [{}].", i + 1)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Read access the engine needs from the knowledge store.
pub trait KnowledgeView {
    fn today(&self) -> NaiveDate;
    /// Whether the principal is on an effective consent scoping one of
    /// `tags`, or on any effective consent when `tags` is `None`.
    fn has_grant(&self, principal: &PrincipalId, tags: Option<&BTreeSet<String>>) -> bool;
    fn access(&self, principal: &PrincipalId, artifact: &KnowledgeArtifact) -> AccessDecision;
    fn artifact(&self, id: &ArtifactId) -> Option<&KnowledgeArtifact>;
    fn capture_date(&self, doc: &DocId) -> Option<NaiveDate>;
    /// Filtered k-NN restricted to records the predicate admits.
    fn search(
        &self,
        vector: &[f32],
        k: usize,
        filter: &MetadataFilter,
        admit: &dyn Fn(&ArtifactId) -> bool,
    ) -> Result<Vec<SearchHit>, QueryError>;
}

#[derive(Clone, Copy, Debug)]
pub struct EngineParams {
    pub token_budget: usize,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self {
            token_budget: DEFAULT_TOKEN_BUDGET,
        }
    }
}

/// Runs the retrieval and generation pipeline. Latency and logging are the
/// caller's concern.
pub fn answer(
    view: &dyn KnowledgeView,
    embedder: &dyn EmbeddingBackend,
    generator: &dyn GenerationBackend,
    query: &Query,
    params: EngineParams,
) -> Result<GroundedResponse, QueryError> {
    if query.question.trim().is_empty() {
        return Err(QueryError::EmptyQuestion);
    }
    if query.k == 0 {
        return Err(QueryError::InvalidK);
    }
    if !view.has_grant(&query.principal, query.filter.domain_tags.as_ref()) {
        return Err(QueryError::Forbidden);
    }
    let vector = match embedder.embed(&query.question) {
        Ok(v) => to_f32(&v),
        Err(EmbedError::EmptyInput) => return Ok(GroundedResponse::ungrounded(query.query_id)),
        Err(e) => return Err(e.into()),
    };
    let admit = |id: &ArtifactId| {
        view.artifact(id).is_some_and(|a| {
            a.state == ArtifactState::Indexed && view.access(&query.principal, a).is_allowed()
        })
    };
    let hits = view.search(&vector, query.k, &query.filter, &admit)?;

    let mut candidates = Vec::with_capacity(hits.len());
    for hit in &hits {
        let artifact = view.artifact(&hit.artifact_id).ok_or_else(|| {
            QueryError::Inconsistent(format!("vector without artifact {}", hit.artifact_id))
        })?;
        candidates.push(ContextCandidate::from_artifact(artifact, hit.similarity));
    }
    let context = assemble_context(&candidates, params.token_budget);
    if context.items.is_empty() {
        return Ok(GroundedResponse::ungrounded(query.query_id));
    }

    let text = generator.generate(&query.question, &context)?;
    if let Err(violation) = validate_citations(&text, context.items.len()) {
        log::warn!("downgrading response {}: {violation}", query.query_id);
        return Ok(GroundedResponse::ungrounded(query.query_id));
    }

    let mut citations = Vec::with_capacity(context.items.len());
    let mut disclosure = Vec::with_capacity(context.items.len());
    for (i, item) in context.items.iter().enumerate() {
        let marker = i + 1;
        // Post-generation re-check: the artifact must still be servable.
        let artifact = view.artifact(&item.artifact_id).ok_or_else(|| {
            QueryError::Inconsistent(format!("artifact {} vanished", item.artifact_id))
        })?;
        if artifact.state != ArtifactState::Indexed
            || view.access(&query.principal, artifact) != AccessDecision::Allow
        {
            log::warn!("downgrading response {}: citation failed re-check", query.query_id);
            return Ok(GroundedResponse::ungrounded(query.query_id));
        }
        let doc_id = artifact.primary_doc();
        let capture_date = view.capture_date(&doc_id).ok_or_else(|| {
            QueryError::Inconsistent(format!("artifact {} has no source document", item.artifact_id))
        })?;
        citations.push(Citation {
            marker,
            artifact_id: artifact.artifact_id,
            artifact_type: artifact.artifact_type,
            statement: artifact.statement.clone(),
        });
        disclosure.push(Disclosure {
            marker,
            artifact_id: artifact.artifact_id,
            confidence: artifact.confidence,
            capture_date,
            domain_tag: artifact.domain_tag.clone(),
            doc_id,
        });
    }
    Ok(GroundedResponse {
        query_id: query.query_id,
        answer: text,
        citations,
        disclosure,
        resolved_flag: None,
        latency_ms: 0,
    })
}
