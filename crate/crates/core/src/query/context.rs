use serde::{Deserialize, Serialize};

use crate::ids::ArtifactId;
use crate::model::KnowledgeArtifact;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextCandidate {
    pub artifact_id: ArtifactId,
    pub statement: String,
    pub confidence: f64,
    pub provenance: String,
    pub similarity: f64,
}

impl ContextCandidate {
    pub fn from_artifact(artifact: &KnowledgeArtifact, similarity: f64) -> Self {
        let provenance = artifact
            .provenance
            .iter()
            .map(|p| format!("doc {} chars {}..{}", p.doc_id, p.char_span.0, p.char_span.1))
            .collect::<Vec<_>>()
            .join("; ");
        Self {
            artifact_id: artifact.artifact_id,
            statement: artifact.statement.clone(),
            confidence: artifact.confidence,
            provenance,
            similarity,
        }
    }

    pub fn tokens(&self) -> usize {
        self.statement.split_whitespace().count()
    }
}

pub type ContextItem = ContextCandidate;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptContext {
    pub items: Vec<ContextItem>,
    pub token_budget: usize,
}

impl PromptContext {
    pub fn tokens(&self) -> usize {
        self.items.iter().map(ContextCandidate::tokens).sum()
    }
}

/// Greedy packing in the given order; a candidate that would overflow the
/// remaining budget is skipped and later ones are still tried.
pub fn assemble_context(hits: &[ContextCandidate], budget: usize) -> PromptContext {
    let mut remaining = budget;
    let mut items = Vec::new();
    for hit in hits {
        let t = hit.tokens();
        if t <= remaining {
            remaining -= t;
            items.push(hit.clone());
        }
    }
    PromptContext {
        items,
        token_budget: budget,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cand(i: u128, tokens: usize) -> ContextCandidate {
        ContextCandidate {
            artifact_id: ArtifactId::from_u128(i),
            statement: vec!["w"; tokens].join(" "),
            confidence: 0.5,
            provenance: String::new(),
            similarity: 1.0 - i as f64 / 100.0,
        }
    }

    #[test]
    fn hundred_each_budget_250() {
        let hits = [cand(0, 100), cand(1, 100), cand(2, 100)];
        let ctx = assemble_context(&hits, 250);
        let ids: Vec<u128> = ctx.items.iter().map(|c| c.artifact_id.as_u128()).collect();
        assert_eq!(ids, vec![0, 1]);
    }

    #[test]
    fn zero_budget() {
        assert!(assemble_context(&[cand(0, 1)], 0).items.is_empty());
    }

    #[test]
    fn skips_overflow_but_keeps_going() {
        let hits = [cand(0, 200), cand(1, 100), cand(2, 40)];
        let ctx = assemble_context(&hits, 250);
        let ids: Vec<u128> = ctx.items.iter().map(|c| c.artifact_id.as_u128()).collect();
        assert_eq!(ids, vec![0, 2]);
    }

    proptest! {
        #[test]
        fn matches_greedy_oracle(sizes in prop::collection::vec(0usize..60, 0..20), budget in 0usize..300) {
            let hits: Vec<_> = sizes.iter().enumerate().map(|(i, &s)| cand(i as u128, s)).collect();
            let ctx = assemble_context(&hits, budget);
            // Oracle: walk indices, accumulate sizes directly.
            let mut used = 0;
            let mut expect = Vec::new();
            for (i, &s) in sizes.iter().enumerate() {
                if used + s <= budget { used += s; expect.push(i as u128); }
            }
            let got: Vec<u128> = ctx.items.iter().map(|c| c.artifact_id.as_u128()).collect();
            prop_assert_eq!(got, expect);
            prop_assert!(ctx.tokens() <= budget);
        }
    }
}
