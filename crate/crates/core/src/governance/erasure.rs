use std::collections::BTreeSet;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ids::{ArtifactId, ExpertId, JobId};

pub const DEFAULT_SLA_HOURS: i64 = 72;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JobStatus {
    Pending,
    Running,
    Complete,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErasureJob {
    pub job_id: JobId,
    pub expert_id: ExpertId,
    pub requested_at: DateTime<Utc>,
    pub deadline: DateTime<Utc>,
    pub status: JobStatus,
    /// Hex salt used for every digest in this job's tombstones and proof.
    pub salt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proof: Option<ErasureProof>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(default)]
    pub overdue_alerted: bool,
}

impl ErasureJob {
    pub fn new(
        job_id: JobId,
        expert_id: ExpertId,
        requested_at: DateTime<Utc>,
        sla_hours: i64,
        salt: [u8; 16],
    ) -> Self {
        Self {
            job_id,
            expert_id,
            requested_at,
            deadline: requested_at + Duration::hours(sla_hours),
            status: JobStatus::Pending,
            salt: hex::encode(salt),
            proof: None,
            failure: None,
            overdue_alerted: false,
        }
    }

    pub fn is_overdue(&self, now: DateTime<Utc>) -> bool {
        !matches!(self.status, JobStatus::Complete) && now > self.deadline
    }

    /// Job-salted digest of an identifier, 32 hex chars.
    pub fn digest(&self, value: &str) -> String {
        salted_digest(&self.salt, value)
    }
}

pub fn salted_digest(salt: &str, value: &str) -> String {
    let mut h = Sha256::new();
    h.update(salt.as_bytes());
    h.update(b":");
    h.update(value.as_bytes());
    hex::encode(&h.finalize()[..16])
}

/// What an erasure removed. Holds counts and salted digests only.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErasureProof {
    pub completed_at: Option<DateTime<Utc>>,
    pub artifacts: usize,
    pub documents: usize,
    pub chunks: usize,
    pub sessions: usize,
    pub vectors: usize,
    pub log_entries: usize,
    pub cached_responses: usize,
    pub corroboration_entries: usize,
    pub audit_entries_tombstoned: usize,
    pub decisions_tombstoned: usize,
    pub artifact_digests: BTreeSet<String>,
    pub residual_scan_clean: bool,
}

/// Fault injection for exercising the residual scan.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ErasureFault {
    #[default]
    None,
    /// Skip deleting one vector so the scan has something to find.
    LeaveOneVector,
}

/// Needles that must not survive an erasure.
#[derive(Clone, Debug, Default)]
pub struct ResidualProbe {
    pub artifact_ids: BTreeSet<ArtifactId>,
    pub statements: BTreeSet<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidualHit {
    pub location: String,
    pub what: String,
}

impl ResidualProbe {
    /// Searches a byte blob for hex ids, raw big-endian ids and statement
    /// text.
    pub fn scan(&self, location: &str, bytes: &[u8]) -> Vec<ResidualHit> {
        let mut hits = Vec::new();
        for id in &self.artifact_ids {
            let hex = id.to_string();
            if contains(bytes, hex.as_bytes()) || contains(bytes, &id.to_bytes()) {
                hits.push(ResidualHit {
                    location: location.to_string(),
                    what: format!("artifact id {}", &hex[..8]),
                });
            }
        }
        for s in &self.statements {
            // Stored JSON escapes quotes and backslashes, so probe that form too.
            let escaped = serde_json::to_string(s).unwrap_or_default();
            let escaped = escaped.trim_matches('"');
            if !s.is_empty()
                && (contains(bytes, s.as_bytes()) || contains(bytes, escaped.as_bytes()))
            {
                hits.push(ResidualHit {
                    location: location.to_string(),
                    what: "statement text".to_string(),
                });
            }
        }
        hits
    }
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn deadline_and_overdue() {
        let t = Utc.with_ymd_and_hms(2026, 1, 1, 0, 0, 0).unwrap();
        let job = ErasureJob::new(JobId::from_u128(1), ExpertId::from_u128(2), t, 72, [7; 16]);
        assert_eq!(job.deadline, t + Duration::hours(72));
        assert!(!job.is_overdue(t + Duration::hours(72)));
        assert!(job.is_overdue(t + Duration::hours(73)));
    }

    #[test]
    fn digest_depends_on_salt() {
        let a = salted_digest("00", "x");
        assert_eq!(a.len(), 32);
        assert_ne!(a, salted_digest("01", "x"));
        assert_eq!(a, salted_digest("00", "x"));
    }

    #[test]
    fn scan_finds_hex_raw_and_text() {
        let id = ArtifactId::from_u128(0xabcdef);
        let probe = ResidualProbe {
            artifact_ids: [id].into(),
            statements: ["Bleed the line first".to_string()].into(),
        };
        assert!(probe.scan("a", b"nothing here").is_empty());
        assert_eq!(probe.scan("a", id.to_string().as_bytes()).len(), 1);
        let mut raw = b"xx".to_vec();
        raw.extend_from_slice(&id.to_bytes());
        assert_eq!(probe.scan("a", &raw).len(), 1);
        assert_eq!(probe.scan("a", b"... Bleed the line first ...").len(), 1);
        let quoted = ResidualProbe {
            statements: ["Say \"stop\" twice".to_string()].into(),
            ..Default::default()
        };
        let json = serde_json::to_vec(&"Say \"stop\" twice").unwrap();
        assert_eq!(quoted.scan("a", &json).len(), 1);
    }
}
