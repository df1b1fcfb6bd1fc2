//! Stratified review sampling and the evaluation metric suite with its targets.

mod metrics;
mod sampling;

pub use metrics::{
    compute_metrics, render_table, Metric, MetricsConfig, MetricsReport, RunningMetrics,
    RunningSnapshot, TargetRow, TargetStatus, Window,
};
pub use sampling::{allocate, stratified_sample, ReviewSample, SampleCandidate, SampleItem, Stratum};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ids::{ArtifactId, PrincipalId, QueryId, SampleId};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("sample of {requested} requested from a population of {available}")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("rating {0} is outside 1..=5")]
    OutOfRange(u8),
    #[error("survey score {0} is outside 0..=10")]
    SurveyOutOfRange(u8),
    #[error("{rater} already rated response {query}")]
    Duplicate { query: QueryId, rater: PrincipalId },
    #[error("response {0} is not in the sample")]
    NotInSample(QueryId),
    #[error("unknown sample {0}")]
    UnknownSample(SampleId),
    #[error("window starts after it ends")]
    EmptyWindow,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionLogEntry {
    pub query_id: QueryId,
    pub principal: PrincipalId,
    pub asked_at: DateTime<Utc>,
    pub latency_ms: u64,
    pub cited_artifact_ids: Vec<ArtifactId>,
    pub resolved_flag: Option<bool>,
}

/// Only domain-expert ratings feed the accuracy metric; annotator ratings
/// are kept for agreement studies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RaterClass {
    Expert,
    Annotator,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub sample_id: SampleId,
    pub query_id: QueryId,
    pub rater: PrincipalId,
    pub rater_class: RaterClass,
    pub score: u8,
    pub rated_at: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub respondent: PrincipalId,
    pub score: u8,
    pub submitted_at: DateTime<Utc>,
}

impl SurveyResponse {
    pub fn new(
        respondent: PrincipalId,
        score: u8,
        submitted_at: DateTime<Utc>,
    ) -> Result<Self, EvalError> {
        if score > 10 {
            return Err(EvalError::SurveyOutOfRange(score));
        }
        Ok(Self {
            respondent,
            score,
            submitted_at,
        })
    }
}
