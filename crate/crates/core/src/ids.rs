//! Opaque 128-bit identifiers rendered as 32 lowercase hex characters.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("malformed identifier {0:?}: expected 32 hex characters")]
pub struct ParseIdError(pub String);

macro_rules! define_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(u128);

        impl $name {
            pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
                let mut bytes = [0u8; 16];
                rng.fill_bytes(&mut bytes);
                Self(u128::from_be_bytes(bytes))
            }

            pub const fn from_u128(raw: u128) -> Self {
                Self(raw)
            }

            pub const fn as_u128(self) -> u128 {
                self.0
            }

            /// Big-endian bytes; the same order as the hex rendering.
            pub fn to_bytes(self) -> [u8; 16] {
                self.0.to_be_bytes()
            }

            pub fn from_bytes(bytes: [u8; 16]) -> Self {
                Self(u128::from_be_bytes(bytes))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{:032x}", self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({:032x})", stringify!($name), self.0)
            }
        }

        impl FromStr for $name {
            type Err = ParseIdError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                if s.len() != 32 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
                    return Err(ParseIdError(s.to_string()));
                }
                u128::from_str_radix(s, 16)
                    .map(Self)
                    .map_err(|_| ParseIdError(s.to_string()))
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

define_id!(ExpertId);
define_id!(DocId);
define_id!(ChunkId);
define_id!(ArtifactId);
define_id!(ConsentId);
define_id!(SessionId);
define_id!(QueryId);
define_id!(JobId);
define_id!(SampleId);

/// A principal as seen by access control. Expert principals use the
/// expert id's hex form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrincipalId(pub String);

impl PrincipalId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<ExpertId> for PrincipalId {
    fn from(id: ExpertId) -> Self {
        Self(id.to_string())
    }
}

impl From<&str> for PrincipalId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

impl fmt::Display for PrincipalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::collections::HashSet;

    #[test]
    fn renders_32_lowercase_hex() {
        let id = ArtifactId::from_u128(0xAB);
        assert_eq!(id.to_string(), "000000000000000000000000000000ab");
        assert_eq!(id.to_string().parse::<ArtifactId>().unwrap(), id);
    }

    #[test]
    fn rejects_malformed() {
        assert!("abc".parse::<DocId>().is_err());
        assert!("g0000000000000000000000000000000".parse::<DocId>().is_err());
        assert!("+0000000000000000000000000000000".parse::<DocId>().is_err());
    }

    #[test]
    fn bulk_ids_do_not_collide() {
        let mut rng = ChaCha20Rng::from_entropy();
        let mut seen = HashSet::new();
        for _ in 0..10_000 {
            assert!(seen.insert(ArtifactId::random(&mut rng)));
            assert!(seen.insert(ArtifactId::from_u128(DocId::random(&mut rng).as_u128())));
            assert!(seen.insert(ArtifactId::from_u128(ChunkId::random(&mut rng).as_u128())));
        }
    }

    #[test]
    fn serde_uses_hex_string() {
        let id = ChunkId::from_u128(u128::MAX);
        let json = serde_json::to_string(&id).unwrap();
        assert_eq!(json, format!("\"{}\"", "f".repeat(32)));
        assert_eq!(serde_json::from_str::<ChunkId>(&json).unwrap(), id);
    }
}
