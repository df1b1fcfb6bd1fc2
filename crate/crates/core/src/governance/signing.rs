use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use super::ConsentRecord;

type HmacSha256 = Hmac<Sha256>;

/// Produces detached signatures for exported consent records.
pub trait ConsentSigner: Send + Sync {
    fn sign(&self, payload: &[u8]) -> String;
    fn verify(&self, payload: &[u8], signature: &str) -> bool;
}

/// HMAC-SHA256 with a shared secret; signatures are 64 hex chars.
pub struct HmacSigner {
    key: Vec<u8>,
}

impl HmacSigner {
    pub fn new(key: impl Into<Vec<u8>>) -> Self {
        Self { key: key.into() }
    }

    fn mac(&self) -> HmacSha256 {
        HmacSha256::new_from_slice(&self.key).expect("hmac accepts any key length")
    }
}

impl ConsentSigner for HmacSigner {
    fn sign(&self, payload: &[u8]) -> String {
        let mut mac = self.mac();
        mac.update(payload);
        hex::encode(mac.finalize().into_bytes())
    }

    fn verify(&self, payload: &[u8], signature: &str) -> bool {
        let Ok(bytes) = hex::decode(signature) else {
            return false;
        };
        let mut mac = self.mac();
        mac.update(payload);
        mac.verify_slice(&bytes).is_ok()
    }
}

/// A consent record with a detached signature over its JSON encoding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedConsent {
    pub consent: ConsentRecord,
    pub signature: String,
}

impl SignedConsent {
    pub fn sign(consent: ConsentRecord, signer: &dyn ConsentSigner) -> Self {
        let payload = serde_json::to_vec(&consent).expect("plain data");
        let signature = signer.sign(&payload);
        Self { consent, signature }
    }

    pub fn verify(&self, signer: &dyn ConsentSigner) -> bool {
        let payload = serde_json::to_vec(&self.consent).expect("plain data");
        signer.verify(&payload, &self.signature)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rfc4231_case_2() {
        let s = HmacSigner::new(b"Jefe".to_vec());
        assert_eq!(
            s.sign(b"what do ya want for nothing?"),
            "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843"
        );
    }

    #[test]
    fn tamper_fails() {
        let s = HmacSigner::new(b"k".to_vec());
        let sig = s.sign(b"payload");
        assert!(s.verify(b"payload", &sig));
        assert!(!s.verify(b"payload!", &sig));
        assert!(!s.verify(b"payload", "zz"));
    }

    #[test]
    fn signed_consent_round_trip() {
        use super::super::consent::tests::{full_grant, now};
        use super::super::grant_consent;
        use crate::ids::{ConsentId, ExpertId};
        let c = grant_consent(full_grant(), ExpertId::from_u128(1), ConsentId::from_u128(2), now())
            .unwrap();
        let s = HmacSigner::new(b"k".to_vec());
        let mut signed = SignedConsent::sign(c, &s);
        assert_eq!(signed.signature.len(), 64);
        let json = serde_json::to_string(&signed).unwrap();
        let back: SignedConsent = serde_json::from_str(&json).unwrap();
        assert!(back.verify(&s));
        signed.consent.voice_clone_consent = true;
        assert!(!signed.verify(&s));
    }
}
