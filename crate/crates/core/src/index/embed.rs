use crate::extraction::content_tokens;
use crate::model::fnv1a64;

pub const DEFAULT_DIMENSION: usize = 64;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum EmbedError {
    #[error("text has no tokens to embed")]
    EmptyInput,
    #[error("embedding backend failed: {0}")]
    Backend(String),
}

pub trait EmbeddingBackend: Send + Sync {
    fn dimension(&self) -> usize;
    /// Unit-length vector of `dimension()` components.
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError>;
}

/// Signed feature hashing over lowercased alphanumeric tokens.
#[derive(Clone, Copy, Debug)]
pub struct HashingEmbedder {
    dimension: usize,
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        Self { dimension }
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION)
    }
}

impl EmbeddingBackend for HashingEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        mock_embed(text, self.dimension)
    }
}

pub fn mock_embed(text: &str, dimension: usize) -> Result<Vec<f64>, EmbedError> {
    let tokens = content_tokens(text);
    if tokens.is_empty() {
        return Err(EmbedError::EmptyInput);
    }
    let mut v = vec![0.0f64; dimension];
    for token in &tokens {
        let h = fnv1a64(token.as_bytes());
        let slot = (h % dimension as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[slot] += sign;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        // Every token cancelled out; fall back to the first token's slot.
        let h = fnv1a64(tokens[0].as_bytes());
        v[(h % dimension as u64) as usize] = 1.0;
        return Ok(v);
    }
    for x in &mut v {
        *x /= norm;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pump_hits_one_component() {
        // FNV-1a("pump") = 0x6c270f0e2716312b: slot 43 of 64, top bit clear.
        let v = mock_embed("pump", 64).unwrap();
        let nonzero: Vec<(usize, f64)> =
            v.iter().copied().enumerate().filter(|(_, x)| *x != 0.0).collect();
        assert_eq!(nonzero, vec![(43, 1.0)]);
    }

    #[test]
    fn repetition_is_normalized_away() {
        assert_eq!(mock_embed("pump pump", 64), mock_embed("pump", 64));
        assert_eq!(mock_embed("PUMP!", 64), mock_embed("pump", 64));
    }

    #[test]
    fn empty_input() {
        assert_eq!(mock_embed("", 64), Err(EmbedError::EmptyInput));
        assert_eq!(mock_embed(" ?! ", 64), Err(EmbedError::EmptyInput));
    }

    #[test]
    fn cancellation_falls_back() {
        // Find two tokens sharing a slot with opposite signs in a tiny space.
        let dim = 1;
        let words: Vec<String> = (0..2000).map(|i| format!("{}x{}", i * 31, i % 7)).collect();
        let key = |w: &str| {
            let h = fnv1a64(w.as_bytes());
            (h % dim as u64, h >> 63)
        };
        let a = &words[0];
        let b = words
            .iter()
            .find(|w| key(w).0 == key(a).0 && key(w).1 != key(a).1)
            .unwrap();
        let v = mock_embed(&format!("{a} {b}"), dim).unwrap();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn unit_norm(text in "[a-z ]{1,80}", dim in 1usize..200) {
            prop_assume!(text.split_whitespace().next().is_some());
            let v = mock_embed(&text, dim).unwrap();
            prop_assert_eq!(v.len(), dim);
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-9);
            prop_assert_eq!(mock_embed(&text, dim).unwrap(), v);
        }
    }
}
