use unicode_normalization::UnicodeNormalization;

use super::IngestError;

/// NFC, LF line endings, collapsed horizontal whitespace, per-line trimming.
pub fn normalize(text: &str) -> String {
    let nfc: String = text.nfc().collect();
    let unified = nfc.replace("\r\n", "\n").replace('\r', "\n");
    let mut out = String::with_capacity(unified.len());
    for (i, line) in unified.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(collapse_blanks(line).trim());
    }
    out
}

pub fn normalize_bytes(bytes: &[u8]) -> Result<String, IngestError> {
    std::str::from_utf8(bytes)
        .map(normalize)
        .map_err(|e| IngestError::InvalidEncoding(e.valid_up_to()))
}

fn collapse_blanks(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut in_run = false;
    for c in line.chars() {
        if c == ' ' || c == '\t' {
            if !in_run {
                out.push(' ');
            }
            in_run = true;
        } else {
            out.push(c);
            in_run = false;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn crlf_becomes_lf() {
        assert_eq!(normalize("a\r\nb"), "a\nb");
    }

    #[test]
    fn blank_runs_collapse() {
        assert_eq!(normalize("a   b"), "a b");
        assert_eq!(normalize("a \t\t b"), "a b");
    }

    #[test]
    fn lines_are_trimmed() {
        assert_eq!(normalize("  a b  \n\t c\t"), "a b\nc");
    }

    #[test]
    fn composes_to_nfc() {
        assert_eq!(normalize("e\u{0301}"), "\u{00e9}");
    }

    #[test]
    fn rejects_invalid_utf8() {
        assert_eq!(
            normalize_bytes(b"ok\xff"),
            Err(IngestError::InvalidEncoding(2))
        );
    }

    fn fixture_text() -> impl Strategy<Value = String> {
        let pieces = prop::sample::select(vec![
            "a", "B", " ", "  ", "\t", "\r\n", "\r", "\n", "e\u{0301}", "\u{0301}", "\u{00a0}",
            "\u{2000}", "\u{3000}", "x y", "Å", "A\u{030a}", "ﬁ", "\u{200b}",
        ]);
        prop::collection::vec(pieces, 0..40).prop_map(|v| v.concat())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn idempotent(text in fixture_text()) {
            let once = normalize(&text);
            prop_assert_eq!(normalize(&once), once);
        }

        #[test]
        fn idempotent_on_arbitrary_strings(text in "\\PC{0,60}") {
            let once = normalize(&text);
            prop_assert_eq!(normalize(&once), once);
        }
    }
}
