use crate::evaluation::EvalError;
use crate::extraction::ExtractionError;
use crate::governance::GovernanceError;
use crate::index::{EmbedError, IndexError};
use crate::ingestion::IngestError;
use crate::model::ModelError;
use crate::query::QueryError;

/// Transport-independent class of an error; the HTTP layer maps each to
/// one status code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Unauthenticated,
    Forbidden,
    NotFound,
    Conflict,
    Invalid,
    Upstream,
    Internal,
}

impl ErrorKind {
    pub fn http_status(self) -> u16 {
        match self {
            ErrorKind::Unauthenticated => 401,
            ErrorKind::Forbidden => 403,
            ErrorKind::NotFound => 404,
            ErrorKind::Conflict => 409,
            ErrorKind::Invalid => 422,
            ErrorKind::Upstream => 502,
            ErrorKind::Internal => 500,
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum Error {
    #[error("missing or unknown bearer token")]
    Unauthenticated,
    #[error("{0}")]
    Forbidden(String),
    #[error("unknown {kind} {id}")]
    NotFound { kind: &'static str, id: String },
    #[error("expert {0} has been erased")]
    ExpertErased(String),
    #[error("document {0} was already extracted")]
    AlreadyExtracted(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Governance(#[from] GovernanceError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("persistence: {0}")]
    Persistence(String),
}

impl Error {
    pub fn not_found(kind: &'static str, id: impl ToString) -> Self {
        Error::NotFound {
            kind,
            id: id.to_string(),
        }
    }

    /// Machine-readable code: the name of the underlying error variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Unauthenticated => "Unauthenticated",
            Error::Forbidden(_) => "Forbidden",
            Error::NotFound { .. } => "NotFound",
            Error::ExpertErased(_) => "ExpertErased",
            Error::AlreadyExtracted(_) => "AlreadyExtracted",
            Error::Invalid(_) => "Invalid",
            Error::Model(e) => model_code(e),
            Error::Ingest(e) => match e {
                IngestError::ConsentMissing => "ConsentMissing",
                IngestError::ConsentScopeViolation(_) => "ConsentScopeViolation",
                IngestError::InvalidDuration(_) => "InvalidDuration",
                IngestError::InvalidEncoding(_) => "InvalidEncoding",
                IngestError::EmptyDocument => "EmptyDocument",
                IngestError::DuplicateDocument => "DuplicateDocument",
                IngestError::BadWindow { .. } => "BadWindow",
                IngestError::BadHeader(_) => "BadHeader",
            },
            Error::Extraction(e) => match e {
                ExtractionError::BackendFailure(_) => "BackendFailure",
                ExtractionError::NotIndexed => "NotIndexed",
                ExtractionError::NotChunked => "NotChunked",
                ExtractionError::MissingEditText => "MissingEditText",
                ExtractionError::Transition(m) => model_code(m),
            },
            Error::Index(e) => match e {
                IndexError::DimensionMismatch { .. } => "DimensionMismatch",
                IndexError::NotValidated(_) => "NotValidated",
                IndexError::CorruptFile(_) => "CorruptFile",
                IndexError::VersionMismatch { .. } => "VersionMismatch",
                IndexError::Embed(e) => embed_code(e),
                IndexError::Io(_) => "Io",
            },
            Error::Query(e) => match e {
                QueryError::Forbidden => "Forbidden",
                QueryError::EmptyQuestion => "EmptyQuestion",
                QueryError::InvalidK => "InvalidK",
                QueryError::UnknownQuery(_) => "UnknownQuery",
                QueryError::AlreadySet(_) => "AlreadySet",
                QueryError::Embed(e) => embed_code(e),
                QueryError::Generation(_) => "GenerationFailure",
                QueryError::Index(_) => "IndexFailure",
                QueryError::Inconsistent(_) => "Inconsistent",
            },
            Error::Governance(e) => match e {
                GovernanceError::MissingElement(_) => "MissingElement",
                GovernanceError::PastRetention(_) => "PastRetention",
                GovernanceError::NotActive(_) => "NotActive",
                GovernanceError::Invalid(_) => "Invalid",
                GovernanceError::ScanFailed(_) => "ScanFailed",
            },
            Error::Eval(e) => match e {
                EvalError::SampleTooLarge { .. } => "SampleTooLarge",
                EvalError::OutOfRange(_) => "OutOfRange",
                EvalError::SurveyOutOfRange(_) => "OutOfRange",
                EvalError::Duplicate { .. } => "Duplicate",
                EvalError::NotInSample(_) => "NotInSample",
                EvalError::UnknownSample(_) => "UnknownSample",
                EvalError::EmptyWindow => "EmptyWindow",
            },
            Error::Persistence(_) => "Persistence",
        }
    }

    pub fn kind(&self) -> ErrorKind {
        use ErrorKind::*;
        match self.code() {
            "Unauthenticated" => Unauthenticated,
            "Forbidden" | "Unauthorized" | "ConsentMissing" | "ConsentScopeViolation" => Forbidden,
            "NotFound" | "UnknownQuery" | "UnknownSample" | "NotInSample" => NotFound,
            "IllegalTransition" | "DuplicateDocument" | "Duplicate" | "AlreadySet"
            | "NotActive" | "NotValidated" | "ExpertErased" | "AlreadyExtracted" => Conflict,
            "BackendFailure" | "GenerationFailure" | "EmbeddingBackend" => Upstream,
            "NotIndexed" | "CorruptFile" | "VersionMismatch" | "Io" | "IndexFailure"
            | "Inconsistent" | "ScanFailed" | "Persistence" => Internal,
            _ => Invalid,
        }
    }
}

fn model_code(e: &ModelError) -> &'static str {
    match e {
        ModelError::InvalidTag(_) => "InvalidTag",
        ModelError::NoDomainTags => "NoDomainTags",
        ModelError::IllegalTransition { .. } => "IllegalTransition",
        ModelError::Unauthorized { .. } => "Unauthorized",
        ModelError::UnknownVariant(_) => "UnknownVariant",
    }
}

fn embed_code(e: &EmbedError) -> &'static str {
    match e {
        EmbedError::EmptyInput => "EmptyInput",
        EmbedError::Backend(_) => "EmbeddingBackend",
    }
}

impl From<EmbedError> for Error {
    fn from(e: EmbedError) -> Self {
        Error::Index(IndexError::Embed(e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ArtifactState;

    #[test]
    fn status_mapping() {
        let cases: Vec<(Error, u16, &str)> = vec![
            (Error::Unauthenticated, 401, "Unauthenticated"),
            (QueryError::Forbidden.into(), 403, "Forbidden"),
            (IngestError::ConsentMissing.into(), 403, "ConsentMissing"),
            (
                ModelError::IllegalTransition {
                    from: ArtifactState::Rejected,
                    to: ArtifactState::Indexed,
                }
                .into(),
                409,
                "IllegalTransition",
            ),
            (IngestError::DuplicateDocument.into(), 409, "DuplicateDocument"),
            (IngestError::EmptyDocument.into(), 422, "EmptyDocument"),
            (Error::not_found("artifact", "x"), 404, "NotFound"),
            (EvalError::OutOfRange(6).into(), 422, "OutOfRange"),
            (
                ExtractionError::Transition(ModelError::NoDomainTags).into(),
                422,
                "NoDomainTags",
            ),
        ];
        for (e, status, code) in cases {
            assert_eq!(e.code(), code);
            assert_eq!(e.kind().http_status(), status, "{code}");
        }
    }
}
