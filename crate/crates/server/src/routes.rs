use std::collections::BTreeMap;
use std::sync::Arc;

use axum::routing::{on, MethodFilter, MethodRouter};
use axum::Router;

use expert_mind_core::store::KnowledgeBase;

use crate::handlers as h;

/// One row of the routing table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Route {
    pub method: &'static str,
    pub path: &'static str,
    /// The [`KnowledgeBase`] method this route calls.
    pub operation: &'static str,
    pub summary: &'static str,
    /// Request body, if any: a schema name or a media type.
    pub request: Option<&'static str>,
    pub response: &'static str,
    pub roles: &'static str,
}

const fn route(
    method: &'static str,
    path: &'static str,
    operation: &'static str,
    summary: &'static str,
    request: Option<&'static str>,
    response: &'static str,
    roles: &'static str,
) -> Route {
    Route {
        method,
        path,
        operation,
        summary,
        request,
        response,
        roles,
    }
}

pub const ROUTES: &[Route] = &[
    route("POST", "/experts", "create_expert", "Register an expert and issue its token", Some("NewExpert"), "CreatedExpert", "Admin"),
    route("GET", "/experts/{expert_id}", "expert", "Read an expert profile", None, "ExpertProfile", "any"),
    route("POST", "/consents", "grant_consent", "Record a signed consent", Some("ConsentGrant"), "ConsentRecord", "Admin, Expert (self)"),
    route("GET", "/consents/{consent_id}", "consent", "Read a consent record", None, "ConsentRecord", "Admin, Expert (self)"),
    route("POST", "/consents/{consent_id}/withdraw", "withdraw_consent", "Withdraw consent and queue erasure", None, "Withdrawal", "Admin, Expert (self)"),
    route("GET", "/consents/{consent_id}/export", "export_consent", "Export a consent with its signature", None, "SignedConsent", "Admin, Expert (self)"),
    route("POST", "/retention/expire", "expire_retention", "Expire consents past retention", None, "ErasureJob[]", "Admin"),
    route("POST", "/sessions", "register_session", "Register a capture session", Some("NewSession"), "CaptureSession", "Admin, Expert (self)"),
    route("POST", "/documents", "ingest_document", "Ingest an upload (header, blank line, text)", Some("text/plain"), "IngestReport", "Admin, Expert (self)"),
    route("POST", "/extract/{doc_id}", "extract", "Extract artifacts into the validation queue", None, "KnowledgeArtifact[]", "Admin, Expert (self)"),
    route("GET", "/validation/queue", "validation_queue", "Pending artifacts of an expert (?expert=)", None, "KnowledgeArtifact[]", "Admin, Expert (self), delegate"),
    route("GET", "/validation/export", "export_queue", "Queue as JSON lines for offline review (?expert=)", None, "application/x-ndjson", "Admin, Expert (self), delegate"),
    route("POST", "/validation/import", "import_queue", "Apply reviewed queue records", Some("application/x-ndjson"), "ImportSummary", "Expert (owner), delegate"),
    route("POST", "/artifacts/{artifact_id}/decision", "decide", "Approve, reject or edit an artifact", Some("DecisionBody"), "DecisionResult", "Expert (owner), delegate"),
    route("POST", "/index/{artifact_id}", "index_artifact", "Index a validated artifact", None, "KnowledgeArtifact", "Admin, Expert (owner)"),
    route("POST", "/index/rebuild", "rebuild_index", "Rebuild the vector index", None, "RebuildSummary", "Admin"),
    route("POST", "/query", "answer", "Ask a question; returns a grounded response", Some("QueryBody"), "GroundedResponse", "any with a consent grant"),
    route("GET", "/query/{query_id}", "response", "Read a logged response", None, "GroundedResponse", "Admin, asker"),
    route("POST", "/feedback/{query_id}", "record_feedback", "Mark a response resolved or not", Some("FeedbackBody"), "InteractionLogEntry", "Admin, asker"),
    route("POST", "/erasure", "request_erasure", "Erase an expert and everything derived from it", Some("ErasureBody"), "ErasureJob", "Admin, Expert (self)"),
    route("POST", "/erasure/{job_id}/retry", "retry_erasure", "Re-run a pending or failed erasure job", None, "ErasureJob", "Admin, Expert (self)"),
    route("GET", "/erasure/{job_id}", "job", "Read an erasure job and its proof", None, "ErasureJob", "Admin, Expert (self)"),
    route("GET", "/alerts", "alerts", "Erasure failure and deadline alerts", None, "Alert[]", "Admin"),
    route("GET", "/metrics", "metrics", "Evaluation report for a window (?from=&to=)", None, "MetricsReport", "Admin"),
    route("POST", "/samples", "create_sample", "Draw a stratified review sample", Some("SampleBody"), "ReviewSample", "Admin"),
    route("GET", "/samples/{sample_id}", "sample", "Read a review sample with its ratings", None, "ReviewSample", "Admin, Expert"),
    route("POST", "/ratings", "record_rating", "Rate a sampled response 1 to 5", Some("RatingBody"), "Rating", "any"),
    route("POST", "/surveys", "submit_survey", "Submit a 0 to 10 recommendation score", Some("SurveyBody"), "SurveyResponse", "any"),
    route("GET", "/audit/verify", "verify_history", "Replay the lifecycle log", None, "HistoryReport", "Admin"),
];

fn handler(r: &Route) -> MethodRouter<Arc<KnowledgeBase>> {
    let m = match r.method {
        "GET" => MethodFilter::GET,
        "POST" => MethodFilter::POST,
        other => panic!("unsupported method {other}"),
    };
    match r.operation {
        "create_expert" => on(m, h::create_expert),
        "expert" => on(m, h::expert),
        "grant_consent" => on(m, h::grant_consent),
        "consent" => on(m, h::consent),
        "withdraw_consent" => on(m, h::withdraw_consent),
        "export_consent" => on(m, h::export_consent),
        "expire_retention" => on(m, h::expire_retention),
        "register_session" => on(m, h::register_session),
        "ingest_document" => on(m, h::ingest_document),
        "extract" => on(m, h::extract),
        "validation_queue" => on(m, h::validation_queue),
        "export_queue" => on(m, h::export_queue),
        "import_queue" => on(m, h::import_queue),
        "decide" => on(m, h::decide),
        "index_artifact" => on(m, h::index_artifact),
        "rebuild_index" => on(m, h::rebuild_index),
        "answer" => on(m, h::answer),
        "response" => on(m, h::response),
        "record_feedback" => on(m, h::record_feedback),
        "request_erasure" => on(m, h::request_erasure),
        "retry_erasure" => on(m, h::retry_erasure),
        "job" => on(m, h::job),
        "alerts" => on(m, h::alerts),
        "metrics" => on(m, h::metrics),
        "create_sample" => on(m, h::create_sample),
        "sample" => on(m, h::sample),
        "record_rating" => on(m, h::record_rating),
        "submit_survey" => on(m, h::submit_survey),
        "verify_history" => on(m, h::verify_history),
        other => panic!("no handler for operation {other}"),
    }
}

/// Builds the router from [`ROUTES`].
pub fn router(kb: Arc<KnowledgeBase>) -> Router {
    let mut by_path: BTreeMap<&str, MethodRouter<Arc<KnowledgeBase>>> = BTreeMap::new();
    for r in ROUTES {
        let mr = handler(r);
        let merged = match by_path.remove(r.path) {
            Some(existing) => existing.merge(mr),
            None => mr,
        };
        by_path.insert(r.path, merged);
    }
    by_path
        .into_iter()
        .fold(Router::new(), |router, (path, mr)| router.route(path, mr))
        .with_state(kb)
}
