use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::ids::{ArtifactId, ExpertId};

use super::{IndexError, MetadataFilter, RecordMetadata};

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingRecord {
    pub artifact_id: ArtifactId,
    pub vector: Vec<f32>,
    pub metadata: RecordMetadata,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchHit {
    pub artifact_id: ArtifactId,
    pub similarity: f64,
}

/// Exact cosine index over every stored vector.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatIndex {
    dimension: usize,
    records: BTreeMap<ArtifactId, (Vec<f32>, RecordMetadata)>,
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// Descending similarity, then ascending id.
pub fn rank_order(a: &SearchHit, b: &SearchHit) -> Ordering {
    b.similarity
        .total_cmp(&a.similarity)
        .then(a.artifact_id.cmp(&b.artifact_id))
}

impl Default for FlatIndex {
    fn default() -> Self {
        Self::new(super::DEFAULT_DIMENSION)
    }
}

impl FlatIndex {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            records: BTreeMap::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn contains(&self, id: &ArtifactId) -> bool {
        self.records.contains_key(id)
    }

    pub fn get(&self, id: &ArtifactId) -> Option<EmbeddingRecord> {
        self.records.get(id).map(|(v, m)| EmbeddingRecord {
            artifact_id: *id,
            vector: v.clone(),
            metadata: m.clone(),
        })
    }

    /// Records in ascending id order.
    pub fn records(&self) -> impl Iterator<Item = EmbeddingRecord> + '_ {
        self.records.iter().map(|(id, (v, m))| EmbeddingRecord {
            artifact_id: *id,
            vector: v.clone(),
            metadata: m.clone(),
        })
    }

    pub fn ids(&self) -> impl Iterator<Item = &ArtifactId> {
        self.records.keys()
    }

    fn check_dimension(&self, len: usize) -> Result<(), IndexError> {
        if len != self.dimension {
            return Err(IndexError::DimensionMismatch {
                expected: self.dimension,
                got: len,
            });
        }
        Ok(())
    }

    /// Inserts or replaces the record for its artifact id.
    pub fn upsert(&mut self, record: EmbeddingRecord) -> Result<(), IndexError> {
        self.check_dimension(record.vector.len())?;
        self.records
            .insert(record.artifact_id, (record.vector, record.metadata));
        Ok(())
    }

    pub fn update_metadata(&mut self, id: &ArtifactId, f: impl FnOnce(&mut RecordMetadata)) -> bool {
        match self.records.get_mut(id) {
            Some((_, meta)) => {
                f(meta);
                true
            }
            None => false,
        }
    }

    pub fn search(
        &self,
        query: &[f32],
        k: usize,
        filter: &MetadataFilter,
    ) -> Result<Vec<SearchHit>, IndexError> {
        self.search_admitted(query, k, filter, |_, _| true)
    }

    /// Like [`search`](Self::search), with an extra per-record admission
    /// predicate evaluated before ranking.
    pub fn search_admitted(
        &self,
        query: &[f32],
        k: usize,
        filter: &MetadataFilter,
        admit: impl Fn(&ArtifactId, &RecordMetadata) -> bool,
    ) -> Result<Vec<SearchHit>, IndexError> {
        self.check_dimension(query.len())?;
        if k == 0 {
            return Ok(Vec::new());
        }
        let mut hits: Vec<SearchHit> = self
            .records
            .iter()
            .filter(|(id, (_, meta))| filter.matches(meta) && admit(id, meta))
            .map(|(id, (v, _))| SearchHit {
                artifact_id: *id,
                similarity: cosine(query, v),
            })
            .collect();
        if hits.len() > k {
            hits.select_nth_unstable_by(k - 1, rank_order);
            hits.truncate(k);
        }
        hits.sort_by(rank_order);
        Ok(hits)
    }

    pub fn delete_ids<'a>(&mut self, ids: impl IntoIterator<Item = &'a ArtifactId>) -> usize {
        ids.into_iter()
            .filter(|id| self.records.remove(id).is_some())
            .count()
    }

    /// Removes every record the resolver attributes to `expert`.
    pub fn delete_by_expert(
        &mut self,
        expert: &ExpertId,
        owner: impl Fn(&ArtifactId, &RecordMetadata) -> Option<ExpertId>,
    ) -> usize {
        let before = self.records.len();
        self.records
            .retain(|id, (_, meta)| owner(id, meta).as_ref() != Some(expert));
        before - self.records.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::DocId;
    use crate::model::ArtifactType;
    use chrono::NaiveDate;

    fn meta(doc: u128) -> RecordMetadata {
        RecordMetadata {
            doc_id: DocId::from_u128(doc),
            capture_date: NaiveDate::from_ymd_opt(2025, 1, 1).unwrap(),
            artifact_type: ArtifactType::FactualClaim,
            confidence: 0.9,
            domain_tag: "grid".into(),
        }
    }

    fn rec(id: u128, v: Vec<f32>) -> EmbeddingRecord {
        EmbeddingRecord {
            artifact_id: ArtifactId::from_u128(id),
            vector: v,
            metadata: meta(id),
        }
    }

    #[test]
    fn k_zero_is_empty() {
        let mut idx = FlatIndex::new(2);
        idx.upsert(rec(1, vec![1.0, 0.0])).unwrap();
        assert!(idx.search(&[1.0, 0.0], 0, &MetadataFilter::default()).unwrap().is_empty());
    }

    #[test]
    fn self_query_is_one() {
        let mut idx = FlatIndex::new(3);
        let v = vec![0.6f32, 0.0, 0.8];
        idx.upsert(rec(1, v.clone())).unwrap();
        let hits = idx.search(&v, 5, &MetadataFilter::default()).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].artifact_id, ArtifactId::from_u128(1));
        assert!((hits[0].similarity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ties_break_by_ascending_id() {
        let mut idx = FlatIndex::new(2);
        for id in [5, 3, 9] {
            idx.upsert(rec(id, vec![1.0, 0.0])).unwrap();
        }
        let ids: Vec<u128> = idx
            .search(&[1.0, 0.0], 2, &MetadataFilter::default())
            .unwrap()
            .iter()
            .map(|h| h.artifact_id.as_u128())
            .collect();
        assert_eq!(ids, vec![3, 5]);
    }

    #[test]
    fn upsert_replaces() {
        let mut idx = FlatIndex::new(2);
        idx.upsert(rec(1, vec![1.0, 0.0])).unwrap();
        idx.upsert(rec(1, vec![0.0, 1.0])).unwrap();
        assert_eq!(idx.len(), 1);
        assert_eq!(idx.get(&ArtifactId::from_u128(1)).unwrap().vector, vec![0.0, 1.0]);
    }

    #[test]
    fn dimension_is_enforced() {
        let mut idx = FlatIndex::new(2);
        assert_eq!(
            idx.upsert(rec(1, vec![1.0])),
            Err(IndexError::DimensionMismatch { expected: 2, got: 1 })
        );
        assert!(idx.search(&[1.0, 0.0, 0.0], 1, &MetadataFilter::default()).is_err());
    }

    #[test]
    fn delete_by_expert_uses_resolver() {
        let mut idx = FlatIndex::new(2);
        for id in 1..=4 {
            idx.upsert(rec(id, vec![1.0, 0.0])).unwrap();
        }
        let owner = |_: &ArtifactId, m: &RecordMetadata| {
            Some(ExpertId::from_u128(m.doc_id.as_u128() % 2))
        };
        assert_eq!(idx.delete_by_expert(&ExpertId::from_u128(1), owner), 2);
        assert_eq!(idx.delete_by_expert(&ExpertId::from_u128(42), owner), 0);
        assert_eq!(idx.len(), 2);
    }

    #[test]
    fn zero_query_scores_zero() {
        let mut idx = FlatIndex::new(2);
        idx.upsert(rec(1, vec![1.0, 0.0])).unwrap();
        let hits = idx.search(&[0.0, 0.0], 1, &MetadataFilter::default()).unwrap();
        assert_eq!(hits[0].similarity, 0.0);
    }
}
