use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::ids::DocId;
use crate::model::ArtifactType;

/// The five metadata fields stored with every vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordMetadata {
    pub doc_id: DocId,
    pub capture_date: NaiveDate,
    pub artifact_type: ArtifactType,
    pub confidence: f64,
    pub domain_tag: String,
}

/// Conjunction of optional predicates; the default matches everything.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetadataFilter {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub artifact_types: Option<BTreeSet<ArtifactType>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain_tags: Option<BTreeSet<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub captured_from: Option<NaiveDate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub captured_to: Option<NaiveDate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_confidence: Option<f64>,
}

impl MetadataFilter {
    pub fn matches(&self, meta: &RecordMetadata) -> bool {
        self.artifact_types
            .as_ref()
            .is_none_or(|s| s.contains(&meta.artifact_type))
            && self
                .domain_tags
                .as_ref()
                .is_none_or(|s| s.contains(&meta.domain_tag))
            && self.captured_from.is_none_or(|lo| meta.capture_date >= lo)
            && self.captured_to.is_none_or(|hi| meta.capture_date <= hi)
            && self.min_confidence.is_none_or(|t| meta.confidence >= t)
    }

    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn with_types(mut self, types: impl IntoIterator<Item = ArtifactType>) -> Self {
        self.artifact_types = Some(types.into_iter().collect());
        self
    }

    pub fn with_tags<S: Into<String>>(mut self, tags: impl IntoIterator<Item = S>) -> Self {
        self.domain_tags = Some(tags.into_iter().map(Into::into).collect());
        self
    }

    pub fn with_dates(mut self, from: Option<NaiveDate>, to: Option<NaiveDate>) -> Self {
        self.captured_from = from;
        self.captured_to = to;
        self
    }

    pub fn with_min_confidence(mut self, threshold: f64) -> Self {
        self.min_confidence = Some(threshold);
        self
    }
}
