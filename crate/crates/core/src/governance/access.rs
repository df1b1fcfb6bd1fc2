use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::ids::{ExpertId, PrincipalId};

use super::{ConsentRecord, ConsentStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DenyReason {
    NoConsent,
    ConsentWithdrawn,
    ConsentExpired,
    RetentionExpired,
    PrincipalNotAuthorized,
    TagOutOfScope,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", content = "reason")]
pub enum AccessDecision {
    Allow,
    Deny(DenyReason),
}

impl AccessDecision {
    pub fn is_allowed(self) -> bool {
        self == AccessDecision::Allow
    }
}

fn evaluate(
    consent: &ConsentRecord,
    principal: &PrincipalId,
    domain_tag: &str,
    today: NaiveDate,
) -> AccessDecision {
    let reason = match consent.status {
        ConsentStatus::Withdrawn => Some(DenyReason::ConsentWithdrawn),
        ConsentStatus::Expired => Some(DenyReason::ConsentExpired),
        ConsentStatus::Active if !consent.retention_valid(today) => {
            Some(DenyReason::RetentionExpired)
        }
        ConsentStatus::Active if !consent.authorized_principals.contains(principal) => {
            Some(DenyReason::PrincipalNotAuthorized)
        }
        ConsentStatus::Active if !consent.scope_domain_tags.contains(domain_tag) => {
            Some(DenyReason::TagOutOfScope)
        }
        ConsentStatus::Active => None,
    };
    reason.map_or(AccessDecision::Allow, AccessDecision::Deny)
}

/// Allows iff some consent of the artifact's expert is Active, unexpired,
/// lists the principal, and scopes the artifact's domain tag. A denial
/// reports the reason from the most recently signed consent.
pub fn check_access<'a>(
    principal: &PrincipalId,
    expert: &ExpertId,
    domain_tag: &str,
    consents: impl IntoIterator<Item = &'a ConsentRecord>,
    today: NaiveDate,
) -> AccessDecision {
    let mut latest: Option<(&ConsentRecord, AccessDecision)> = None;
    for consent in consents.into_iter().filter(|c| c.expert_id == *expert) {
        let decision = evaluate(consent, principal, domain_tag, today);
        if decision.is_allowed() {
            return decision;
        }
        let newer = latest.is_none_or(|(c, _)| {
            (consent.signed_at, consent.consent_id) > (c.signed_at, c.consent_id)
        });
        if newer {
            latest = Some((consent, decision));
        }
    }
    latest.map_or(AccessDecision::Deny(DenyReason::NoConsent), |(_, d)| d)
}

/// Whether the principal appears on an effective consent. With `tags`,
/// that consent must also scope at least one of them.
pub fn has_grant<'a>(
    principal: &PrincipalId,
    tags: Option<&BTreeSet<String>>,
    consents: impl IntoIterator<Item = &'a ConsentRecord>,
    today: NaiveDate,
) -> bool {
    consents.into_iter().any(|c| {
        c.is_effective(today)
            && c.authorized_principals.contains(principal)
            && tags.is_none_or(|t| !c.scope_domain_tags.is_disjoint(t))
    })
}

#[cfg(test)]
mod tests {
    use super::super::consent::tests::{full_grant, now};
    use super::super::grant_consent;
    use super::*;
    use crate::ids::ConsentId;

    fn consent() -> ConsentRecord {
        grant_consent(full_grant(), ExpertId::from_u128(1), ConsentId::from_u128(2), now()).unwrap()
    }

    #[test]
    fn listed_principal_in_scope_is_allowed() {
        let c = consent();
        let d = check_access(
            &PrincipalId::new("eng-1"),
            &ExpertId::from_u128(1),
            "turbines",
            [&c],
            now().date_naive(),
        );
        assert_eq!(d, AccessDecision::Allow);
    }

    #[test]
    fn withdrawn_consent_denies() {
        let mut c = consent();
        c.withdraw(now()).unwrap();
        let d = check_access(
            &PrincipalId::new("eng-1"),
            &ExpertId::from_u128(1),
            "turbines",
            [&c],
            now().date_naive(),
        );
        assert_eq!(d, AccessDecision::Deny(DenyReason::ConsentWithdrawn));
    }

    #[test]
    fn no_consent_for_expert() {
        let c = consent();
        let d = check_access(
            &PrincipalId::new("eng-1"),
            &ExpertId::from_u128(9),
            "turbines",
            [&c],
            now().date_naive(),
        );
        assert_eq!(d, AccessDecision::Deny(DenyReason::NoConsent));
    }

    #[test]
    fn truth_table_matches_oracle() {
        let today = now().date_naive();
        let statuses = [ConsentStatus::Active, ConsentStatus::Withdrawn, ConsentStatus::Expired];
        let mut combos = 0;
        for listed in [true, false] {
            for in_scope in [true, false] {
                for retention_ok in [true, false] {
                    for status in statuses {
                        let mut c = consent();
                        c.status = status;
                        if !retention_ok {
                            c.retention_until = today.pred_opt().unwrap();
                        }
                        let principal = PrincipalId::new(if listed { "eng-1" } else { "eng-2" });
                        let tag = if in_scope { "turbines" } else { "grid" };
                        let got =
                            check_access(&principal, &ExpertId::from_u128(1), tag, [&c], today);
                        let oracle =
                            listed && in_scope && retention_ok && status == ConsentStatus::Active;
                        assert_eq!(got.is_allowed(), oracle, "{listed} {in_scope} {retention_ok} {status:?}");
                        combos += 1;
                    }
                }
            }
        }
        assert_eq!(combos, 24);
    }

    #[test]
    fn grant_respects_requested_tags() {
        let c = consent();
        let today = now().date_naive();
        let p = PrincipalId::new("eng-1");
        let tags = |t: &str| BTreeSet::from([t.to_string()]);
        assert!(has_grant(&p, None, [&c], today));
        assert!(has_grant(&p, Some(&tags("turbines")), [&c], today));
        assert!(!has_grant(&p, Some(&tags("grid")), [&c], today));
        assert!(!has_grant(&PrincipalId::new("eng-2"), None, [&c], today));
    }

    #[test]
    fn voice_clone_flag_is_irrelevant() {
        let today = now().date_naive();
        let mut c = consent();
        for principal in ["eng-1", "eng-2"] {
            for tag in ["turbines", "grid"] {
                let p = PrincipalId::new(principal);
                c.voice_clone_consent = false;
                let a = check_access(&p, &ExpertId::from_u128(1), tag, [&c], today);
                c.voice_clone_consent = true;
                let b = check_access(&p, &ExpertId::from_u128(1), tag, [&c], today);
                assert_eq!(a, b);
            }
        }
    }
}
