//! Speech-to-text behind a replaceable interface.

use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum TranscriptionError {
    #[error("no transcript sidecar at {0}")]
    MissingSidecar(PathBuf),
    #[error("transcript {path} is not valid UTF-8")]
    Encoding { path: PathBuf },
    #[error("transcription backend failed: {0}")]
    Backend(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimedSegment {
    pub start_ms: u64,
    pub end_ms: u64,
    pub text: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimedText {
    pub segments: Vec<TimedSegment>,
}

impl TimedText {
    pub fn text(&self) -> String {
        self.segments
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

pub trait TranscriptionBackend: Send + Sync {
    fn languages(&self) -> &[&'static str];
    fn transcribe(&self, audio: &Path) -> Result<TimedText, TranscriptionError>;
}

/// Returns the `.txt` file sitting next to the audio reference, unchanged.
#[derive(Clone, Debug, Default)]
pub struct SidecarTranscriber;

impl SidecarTranscriber {
    pub fn sidecar_path(audio: &Path) -> PathBuf {
        audio.with_extension("txt")
    }
}

impl TranscriptionBackend for SidecarTranscriber {
    fn languages(&self) -> &[&'static str] {
        &["en", "es"]
    }

    fn transcribe(&self, audio: &Path) -> Result<TimedText, TranscriptionError> {
        let path = Self::sidecar_path(audio);
        let bytes = fs::read(&path).map_err(|_| TranscriptionError::MissingSidecar(path.clone()))?;
        let text = String::from_utf8(bytes).map_err(|_| TranscriptionError::Encoding { path })?;
        Ok(TimedText {
            segments: vec![TimedSegment {
                start_ms: 0,
                end_ms: 0,
                text,
            }],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_is_passed_through() {
        let dir = tempfile::tempdir().unwrap();
        let audio = dir.path().join("session1.wav");
        fs::write(dir.path().join("session1.txt"), "CLAIM: the compressor surges below 40% load\n").unwrap();
        let t = SidecarTranscriber.transcribe(&audio).unwrap();
        assert_eq!(t.text(), "CLAIM: the compressor surges below 40% load\n");
        assert_eq!(SidecarTranscriber.transcribe(&audio).unwrap(), t);
    }

    #[test]
    fn missing_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let err = SidecarTranscriber.transcribe(&dir.path().join("x.wav")).unwrap_err();
        assert!(matches!(err, TranscriptionError::MissingSidecar(_)));
    }
}
