use std::collections::BTreeSet;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::ids::{ConsentId, ExpertId, PrincipalId};
use crate::model::{validate_tag, Modality};

use super::GovernanceError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConsentStatus {
    Active,
    Withdrawn,
    Expired,
}

/// The four elements an informed consent must carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConsentElement {
    /// Domain tags the capture may cover.
    Scope,
    /// Capture modalities, i.e. the permitted uses.
    Uses,
    /// Principals allowed to query the knowledge.
    AccessList,
    /// How long the knowledge may be kept.
    Retention,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsentRecord {
    pub consent_id: ConsentId,
    pub expert_id: ExpertId,
    pub scope_domain_tags: BTreeSet<String>,
    pub scope_modalities: BTreeSet<Modality>,
    pub authorized_principals: BTreeSet<PrincipalId>,
    pub retention_until: NaiveDate,
    #[serde(default)]
    pub voice_clone_consent: bool,
    /// Free-text reference to the agreed intellectual-property terms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub license_ref: Option<String>,
    /// Principals who may validate on the expert's behalf.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub validation_delegates: BTreeSet<PrincipalId>,
    pub signed_at: DateTime<Utc>,
    pub status: ConsentStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status_changed_at: Option<DateTime<Utc>>,
}

impl ConsentRecord {
    pub fn retention_valid(&self, today: NaiveDate) -> bool {
        today <= self.retention_until
    }

    /// Active and inside its retention period.
    pub fn is_effective(&self, today: NaiveDate) -> bool {
        self.status == ConsentStatus::Active && self.retention_valid(today)
    }

    pub fn covers_modality(&self, modality: Modality) -> bool {
        self.scope_modalities.contains(&modality)
    }

    fn end(&mut self, status: ConsentStatus, at: DateTime<Utc>) -> Result<(), GovernanceError> {
        if self.status != ConsentStatus::Active {
            return Err(GovernanceError::NotActive(self.status));
        }
        self.status = status;
        self.status_changed_at = Some(at);
        Ok(())
    }

    pub fn withdraw(&mut self, at: DateTime<Utc>) -> Result<(), GovernanceError> {
        self.end(ConsentStatus::Withdrawn, at)
    }

    pub fn expire(&mut self, at: DateTime<Utc>) -> Result<(), GovernanceError> {
        self.end(ConsentStatus::Expired, at)
    }
}

/// Fields supplied when a consent is signed. Absent elements are reported
/// as [`GovernanceError::MissingElement`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConsentGrant {
    pub expert_id: Option<ExpertId>,
    pub scope_domain_tags: BTreeSet<String>,
    pub scope_modalities: BTreeSet<Modality>,
    pub authorized_principals: BTreeSet<PrincipalId>,
    pub retention_until: Option<NaiveDate>,
    pub voice_clone_consent: bool,
    pub license_ref: Option<String>,
    pub validation_delegates: BTreeSet<PrincipalId>,
}

pub fn grant_consent(
    grant: ConsentGrant,
    expert_id: ExpertId,
    consent_id: ConsentId,
    now: DateTime<Utc>,
) -> Result<ConsentRecord, GovernanceError> {
    if grant.scope_domain_tags.is_empty() {
        return Err(GovernanceError::MissingElement(ConsentElement::Scope));
    }
    if grant.scope_modalities.is_empty() {
        return Err(GovernanceError::MissingElement(ConsentElement::Uses));
    }
    if grant.authorized_principals.is_empty() {
        return Err(GovernanceError::MissingElement(ConsentElement::AccessList));
    }
    let retention_until = grant
        .retention_until
        .ok_or(GovernanceError::MissingElement(ConsentElement::Retention))?;
    for tag in &grant.scope_domain_tags {
        validate_tag(tag).map_err(|e| GovernanceError::Invalid(e.to_string()))?;
    }
    if retention_until <= now.date_naive() {
        return Err(GovernanceError::PastRetention(retention_until));
    }
    Ok(ConsentRecord {
        consent_id,
        expert_id,
        scope_domain_tags: grant.scope_domain_tags,
        scope_modalities: grant.scope_modalities,
        authorized_principals: grant.authorized_principals,
        retention_until,
        voice_clone_consent: grant.voice_clone_consent,
        license_ref: grant.license_ref,
        validation_delegates: grant.validation_delegates,
        signed_at: now,
        status: ConsentStatus::Active,
        status_changed_at: None,
    })
}
