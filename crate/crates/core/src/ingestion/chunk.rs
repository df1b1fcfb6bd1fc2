use super::IngestError;

pub const DEFAULT_WINDOW: usize = 512;
pub const DEFAULT_OVERLAP: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChunkParams {
    pub window: usize,
    pub overlap: usize,
}

impl Default for ChunkParams {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            overlap: DEFAULT_OVERLAP,
        }
    }
}

impl ChunkParams {
    pub fn new(window: usize, overlap: usize) -> Result<Self, IngestError> {
        if overlap >= window {
            return Err(IngestError::BadWindow { window, overlap });
        }
        Ok(Self { window, overlap })
    }

    pub fn stride(&self) -> usize {
        self.window - self.overlap
    }
}

/// A chunk before it is given an id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChunkSpan {
    pub seq: usize,
    pub start_token: usize,
    pub end_token: usize,
    /// Byte range of the chunk text within the source text.
    pub byte_range: (usize, usize),
    pub text: String,
}

/// Byte ranges of maximal non-whitespace runs.
pub fn token_offsets(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, text.len()));
    }
    out
}

pub fn chunk(text: &str, params: ChunkParams) -> Result<Vec<ChunkSpan>, IngestError> {
    let params = ChunkParams::new(params.window, params.overlap)?;
    let tokens = token_offsets(text);
    let n = tokens.len();
    let mut chunks = Vec::new();
    if n == 0 {
        return Ok(chunks);
    }
    let mut start = 0;
    loop {
        let end = (start + params.window).min(n);
        let byte_range = (tokens[start].0, tokens[end - 1].1);
        chunks.push(ChunkSpan {
            seq: chunks.len(),
            start_token: start,
            end_token: end,
            byte_range,
            text: text[byte_range.0..byte_range.1].to_string(),
        });
        if end == n {
            break;
        }
        start += params.stride();
    }
    Ok(chunks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(n: usize) -> String {
        (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn thousand_tokens_make_three_chunks() {
        let chunks = chunk(&words(1000), ChunkParams::default()).unwrap();
        let starts: Vec<usize> = chunks.iter().map(|c| c.start_token).collect();
        assert_eq!(starts, vec![0, 448, 896]);
        let last = chunks.last().unwrap();
        assert_eq!(last.end_token - last.start_token, 104);
        assert_eq!(chunks[1].end_token, 960);
    }

    #[test]
    fn short_text_is_one_chunk() {
        let chunks = chunk(&words(10), ChunkParams::default()).unwrap();
        assert_eq!(chunks.len(), 1);
        assert_eq!((chunks[0].start_token, chunks[0].end_token), (0, 10));
    }

    #[test]
    fn bad_window() {
        assert_eq!(
            chunk("a", ChunkParams { window: 4, overlap: 4 }),
            Err(IngestError::BadWindow { window: 4, overlap: 4 })
        );
        assert!(ChunkParams::new(0, 0).is_err());
    }

    #[test]
    fn keeps_line_breaks_inside_chunk() {
        let chunks = chunk("a b\nc  d", ChunkParams::new(3, 1).unwrap()).unwrap();
        assert_eq!(chunks[0].text, "a b\nc");
        assert_eq!(chunks[1].text, "c  d");
    }

    #[test]
    fn exact_fit_has_no_tail_chunk() {
        let chunks = chunk(&words(960), ChunkParams::default()).unwrap();
        assert_eq!(chunks.len(), 2);
    }

    proptest! {
        #[test]
        fn chunks_reconstruct_the_token_sequence(
            n in 0usize..400,
            window in 1usize..64,
            overlap_frac in 0.0f64..1.0,
            seps in prop::collection::vec(prop::sample::select(vec![" ", "\n", "\t ", "  "]), 400),
        ) {
            let overlap = ((window as f64) * overlap_frac) as usize % window;
            let mut text = String::new();
            for (i, sep) in seps.iter().enumerate().take(n) {
                if i > 0 { text.push_str(sep); }
                text.push_str(&format!("t{i}"));
            }
            let params = ChunkParams::new(window, overlap).unwrap();
            let chunks = chunk(&text, params).unwrap();
            let all: Vec<&str> = text.split_whitespace().collect();
            let mut rebuilt: Vec<&str> = Vec::new();
            for (i, c) in chunks.iter().enumerate() {
                prop_assert!(c.end_token - c.start_token <= window);
                prop_assert_eq!(c.start_token, i * params.stride());
                let toks: Vec<&str> = c.text.split_whitespace().collect();
                prop_assert_eq!(toks.len(), c.end_token - c.start_token);
                if i == 0 {
                    rebuilt.extend(toks);
                } else {
                    let prev = &chunks[i - 1];
                    prop_assert_eq!(prev.end_token - c.start_token, overlap);
                    rebuilt.extend(toks.into_iter().skip(overlap));
                }
            }
            prop_assert_eq!(rebuilt, all);
        }
    }
}
