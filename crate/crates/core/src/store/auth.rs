use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ids::{ExpertId, PrincipalId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Expert,
    Engineer,
    Admin,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Principal {
    pub principal_id: PrincipalId,
    pub role: Role,
    /// SHA-256 of the bearer token, hex.
    pub token_hash: String,
}

impl Principal {
    pub fn is_admin(&self) -> bool {
        self.role == Role::Admin
    }

    /// Whether this principal is the expert itself.
    pub fn is_expert(&self, expert: &ExpertId) -> bool {
        self.role == Role::Expert && self.principal_id.as_str() == expert.to_string()
    }

    /// An in-process principal with no token, for trusted local callers.
    pub fn local(principal_id: impl Into<String>, role: Role) -> Self {
        Self {
            principal_id: PrincipalId::new(principal_id),
            role,
            token_hash: String::new(),
        }
    }
}

pub fn hash_token(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

/// One row of the static token table. Either the clear token or its
/// SHA-256 may be given; only the hash is kept in memory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenEntry {
    pub principal: String,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_sha256: Option<String>,
}

impl TokenEntry {
    pub fn to_principal(&self) -> Option<Principal> {
        let token_hash = match (&self.token_sha256, &self.token) {
            (Some(h), _) => h.to_ascii_lowercase(),
            (None, Some(t)) => hash_token(t),
            (None, None) => return None,
        };
        Some(Principal {
            principal_id: PrincipalId::new(&self.principal),
            role: self.role,
            token_hash,
        })
    }
}
