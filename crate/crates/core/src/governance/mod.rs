//! Consent ledger, access control, erasure and retention.

mod access;
mod consent;
mod erasure;
mod signing;

pub use access::{check_access, has_grant, AccessDecision, DenyReason};
pub use consent::{grant_consent, ConsentElement, ConsentGrant, ConsentRecord, ConsentStatus};
pub use erasure::{
    salted_digest, ErasureFault, ErasureJob, ErasureProof, JobStatus, ResidualHit, ResidualProbe,
    DEFAULT_SLA_HOURS,
};
pub use signing::{ConsentSigner, HmacSigner, SignedConsent};

use chrono::NaiveDate;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum GovernanceError {
    #[error("consent is missing its {0:?} element")]
    MissingElement(ConsentElement),
    #[error("retention date {0} is not in the future")]
    PastRetention(NaiveDate),
    #[error("consent is {0:?}, not Active")]
    NotActive(ConsentStatus),
    #[error("{0}")]
    Invalid(String),
    #[error("residual data found after erasure: {0}")]
    ScanFailed(String),
}
