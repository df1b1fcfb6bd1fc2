use crate::model::ArtifactType;

use super::{ExtractionBackend, ExtractionError, ExtractionHit};

const MARKERS: [(&str, ArtifactType); 4] = [
    ("CLAIM:", ArtifactType::FactualClaim),
    ("HEURISTIC:", ArtifactType::DecisionHeuristic),
    ("ANOMALY:", ArtifactType::AnomalyPattern),
    ("PRACTICE:", ArtifactType::BestPractice),
];

/// Deterministic extractor: a line starting with `CLAIM:`, `HEURISTIC:`,
/// `ANOMALY:` or `PRACTICE:` yields one artifact whose statement is the rest
/// of the line. Lines with an empty statement are ignored.
#[derive(Clone, Copy, Debug, Default)]
pub struct MarkerExtractor;

impl ExtractionBackend for MarkerExtractor {
    fn extract(&self, chunk_text: &str) -> Result<Vec<ExtractionHit>, ExtractionError> {
        let mut hits = Vec::new();
        let mut line_start = 0usize;
        for line in chunk_text.split('\n') {
            if let Some((marker, kind)) = MARKERS.iter().find(|(m, _)| line.starts_with(m)) {
                let rest = &line[marker.len()..];
                let statement = rest.trim();
                if !statement.is_empty() {
                    let lead = rest.len() - rest.trim_start().len();
                    let byte_start = line_start + marker.len() + lead;
                    let byte_end = byte_start + statement.len();
                    hits.push(ExtractionHit {
                        artifact_type: *kind,
                        statement: statement.to_string(),
                        char_span: (
                            chunk_text[..byte_start].chars().count(),
                            chunk_text[..byte_end].chars().count(),
                        ),
                    });
                }
            }
            line_start += line.len() + 1;
        }
        Ok(hits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_artifact_per_marker_line() {
        let text = "intro\nCLAIM: x\nCLAIM: y\nHEURISTIC: z\nnot CLAIM: w";
        let hits = MarkerExtractor.extract(text).unwrap();
        let kinds: Vec<ArtifactType> = hits.iter().map(|h| h.artifact_type).collect();
        assert_eq!(
            kinds,
            vec![
                ArtifactType::FactualClaim,
                ArtifactType::FactualClaim,
                ArtifactType::DecisionHeuristic
            ]
        );
        assert_eq!(hits[0].statement, "x");
    }

    #[test]
    fn nothing_without_markers() {
        assert!(MarkerExtractor.extract("claim: lowercase\nplain").unwrap().is_empty());
        assert!(MarkerExtractor.extract("").unwrap().is_empty());
        assert!(MarkerExtractor.extract("CLAIM:   ").unwrap().is_empty());
    }

    #[test]
    fn spans_point_at_the_statement_in_chars() {
        let text = "Über\nANOMALY:  Lager heiß bei 80%\nPRACTICE: log it";
        for hit in MarkerExtractor.extract(text).unwrap() {
            let (a, b) = hit.char_span;
            let got: String = text.chars().skip(a).take(b - a).collect();
            assert_eq!(got, hit.statement);
        }
    }

    #[test]
    fn pure_function_of_text() {
        let text = "CLAIM: a\nPRACTICE: b\nANOMALY: c";
        assert_eq!(
            MarkerExtractor.extract(text).unwrap(),
            MarkerExtractor.extract(text).unwrap()
        );
    }
}
