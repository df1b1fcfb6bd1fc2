use std::sync::OnceLock;

use regex::Regex;

use super::NO_GROUNDING_NOTICE;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum CitationViolation {
    #[error("sentence {0} carries no citation marker")]
    Uncited(usize),
    #[error("marker [{0}] does not resolve to a citation")]
    Dangling(usize),
    #[error("ungrounded answer is not the fixed notice")]
    NotNotice,
    #[error("answer is empty")]
    Empty,
}

/// Splits after `.`, `!` or `?` when followed by whitespace or the end.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            let boundary = chars.peek().is_none_or(|&(_, n)| n.is_whitespace());
            if boundary {
                let end = i + c.len_utf8();
                let s = text[start..end].trim();
                if !s.is_empty() {
                    out.push(s);
                }
                start = end;
            }
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

fn marker_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[(\d+)\]").unwrap())
}

/// Every sentence must carry at least one marker and every marker must
/// resolve into `1..=citations`.
pub fn validate_citations(answer: &str, citations: usize) -> Result<(), CitationViolation> {
    if citations == 0 {
        return if answer == NO_GROUNDING_NOTICE {
            Ok(())
        } else {
            Err(CitationViolation::NotNotice)
        };
    }
    let sentences = split_sentences(answer);
    if sentences.is_empty() {
        return Err(CitationViolation::Empty);
    }
    for (i, sentence) in sentences.iter().enumerate() {
        let mut cited = false;
        for cap in marker_re().captures_iter(sentence) {
            let n: usize = cap[1].parse().unwrap_or(0);
            if n == 0 || n > citations {
                return Err(CitationViolation::Dangling(n));
            }
            cited = true;
        }
        if !cited {
            return Err(CitationViolation::Uncited(i + 1));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitting() {
        assert_eq!(split_sentences("A [1]. B [2]!"), vec!["A [1].", "B [2]!"]);
        assert_eq!(split_sentences("Use 2.5 bar [1]."), vec!["Use 2.5 bar [1]."]);
        assert_eq!(split_sentences("trailing [1]"), vec!["trailing [1]"]);
    }

    #[test]
    fn rejects_uncited_sentence() {
        assert_eq!(
            validate_citations("Cited [1]. Not cited.", 1),
            Err(CitationViolation::Uncited(2))
        );
    }

    #[test]
    fn rejects_dangling_marker() {
        assert_eq!(validate_citations("X [3].", 2), Err(CitationViolation::Dangling(3)));
        assert_eq!(validate_citations("X [0].", 2), Err(CitationViolation::Dangling(0)));
    }

    #[test]
    fn empty_citations_require_notice() {
        assert!(validate_citations(NO_GROUNDING_NOTICE, 0).is_ok());
        assert_eq!(validate_citations("Hi.", 0), Err(CitationViolation::NotNotice));
    }
}
