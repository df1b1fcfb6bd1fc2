use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ids::DocId;

/// Order- and case-insensitive digest of a statement's token multiset.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fingerprint(String);

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Lowercased alphanumeric runs; shared with the mock embedder.
pub fn content_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn fingerprint(statement: &str) -> Fingerprint {
    let mut tokens = content_tokens(statement);
    tokens.sort_unstable();
    let mut hasher = Sha256::new();
    for t in &tokens {
        hasher.update(t.as_bytes());
        hasher.update([0x1f]);
    }
    let digest = hasher.finalize();
    Fingerprint(hex::encode(&digest[..16]))
}

/// Which documents contain each statement.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorroborationIndex {
    entries: BTreeMap<Fingerprint, BTreeSet<DocId>>,
}

impl CorroborationIndex {
    pub fn add(&mut self, fp: Fingerprint, doc: DocId) -> bool {
        self.entries.entry(fp).or_default().insert(doc)
    }

    /// Distinct documents supporting the fingerprint, if known.
    pub fn support(&self, fp: &Fingerprint) -> Option<usize> {
        self.entries.get(fp).map(BTreeSet::len)
    }

    pub fn docs(&self, fp: &Fingerprint) -> Option<&BTreeSet<DocId>> {
        self.entries.get(fp)
    }

    /// Drops the given documents everywhere; empty entries disappear.
    pub fn remove_docs(&mut self, docs: &BTreeSet<DocId>) -> usize {
        let mut removed = 0;
        self.entries.retain(|_, set| {
            let before = set.len();
            set.retain(|d| !docs.contains(d));
            removed += before - set.len();
            !set.is_empty()
        });
        removed
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
