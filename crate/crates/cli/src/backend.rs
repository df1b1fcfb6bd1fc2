//! One logical operation, two transports: the in-process store or a
//! running server. Both return the JSON the HTTP API would return.

use chrono::NaiveDate;
use serde::Serialize;
use serde_json::{json, Value};

use expert_mind_core::extraction::{export_jsonl, import_jsonl, QueueRecord};
use expert_mind_core::governance::ConsentGrant;
use expert_mind_core::ids::{ArtifactId, ConsentId, DocId, ExpertId, JobId, QueryId, SampleId};
use expert_mind_core::index::MetadataFilter;
use expert_mind_core::store::{Error, KnowledgeBase, Principal};
use expert_mind_server::{ApiError, ROUTES};

#[derive(Clone, Debug)]
pub enum Op {
    CreateExpert { display_name: String, domain_tags: Vec<String> },
    GrantConsent(ConsentGrant),
    WithdrawConsent(ConsentId),
    ExportConsent(ConsentId),
    ExpireRetention,
    IngestDocument(Vec<u8>),
    Extract(DocId),
    ExportQueue(ExpertId),
    ImportQueue(Vec<QueueRecord>),
    IndexArtifact(ArtifactId),
    RebuildIndex,
    Answer { question: String, filter: Option<MetadataFilter>, k: Option<usize> },
    Feedback { query_id: QueryId, resolved: bool },
    RequestErasure(ExpertId),
    RetryErasure(JobId),
    Alerts,
    Metrics { from: NaiveDate, to: NaiveDate },
    CreateSample { n: usize, seed: u64 },
    Sample(SampleId),
    RecordRating { sample_id: SampleId, query_id: QueryId, score: u8 },
    SubmitSurvey(u8),
    VerifyHistory,
}

enum Payload {
    None,
    Json(Value),
    Raw(Vec<u8>, &'static str),
}

impl Op {
    /// Name of the store operation, which is also the route's `operation`.
    pub fn operation(&self) -> &'static str {
        match self {
            Op::CreateExpert { .. } => "create_expert",
            Op::GrantConsent(_) => "grant_consent",
            Op::WithdrawConsent(_) => "withdraw_consent",
            Op::ExportConsent(_) => "export_consent",
            Op::ExpireRetention => "expire_retention",
            Op::IngestDocument(_) => "ingest_document",
            Op::Extract(_) => "extract",
            Op::ExportQueue(_) => "export_queue",
            Op::ImportQueue(_) => "import_queue",
            Op::IndexArtifact(_) => "index_artifact",
            Op::RebuildIndex => "rebuild_index",
            Op::Answer { .. } => "answer",
            Op::Feedback { .. } => "record_feedback",
            Op::RequestErasure(_) => "request_erasure",
            Op::RetryErasure(_) => "retry_erasure",
            Op::Alerts => "alerts",
            Op::Metrics { .. } => "metrics",
            Op::CreateSample { .. } => "create_sample",
            Op::Sample(_) => "sample",
            Op::RecordRating { .. } => "record_rating",
            Op::SubmitSurvey(_) => "submit_survey",
            Op::VerifyHistory => "verify_history",
        }
    }

    fn path_param(&self) -> Option<String> {
        match self {
            Op::WithdrawConsent(id) | Op::ExportConsent(id) => Some(id.to_string()),
            Op::Extract(id) => Some(id.to_string()),
            Op::IndexArtifact(id) => Some(id.to_string()),
            Op::Feedback { query_id, .. } => Some(query_id.to_string()),
            Op::RetryErasure(id) => Some(id.to_string()),
            Op::Sample(id) => Some(id.to_string()),
            _ => None,
        }
    }

    fn query(&self) -> Vec<(&'static str, String)> {
        match self {
            Op::ExportQueue(expert) => vec![("expert", expert.to_string())],
            Op::Metrics { from, to } => vec![("from", from.to_string()), ("to", to.to_string())],
            _ => Vec::new(),
        }
    }

    fn payload(&self) -> Payload {
        match self {
            Op::CreateExpert { display_name, domain_tags } => {
                Payload::Json(json!({ "display_name": display_name, "domain_tags": domain_tags }))
            }
            Op::GrantConsent(g) => Payload::Json(to_json(g)),
            Op::IngestDocument(bytes) => Payload::Raw(bytes.clone(), "text/plain"),
            Op::ImportQueue(records) => {
                Payload::Raw(export_jsonl(records).into_bytes(), "application/x-ndjson")
            }
            Op::Answer { question, filter, k } => {
                Payload::Json(json!({ "question": question, "filter": filter, "k": k }))
            }
            Op::Feedback { resolved, .. } => Payload::Json(json!({ "resolved": resolved })),
            Op::RequestErasure(expert) => Payload::Json(json!({ "expert_id": expert })),
            Op::CreateSample { n, seed } => Payload::Json(json!({ "n": n, "seed": seed })),
            Op::RecordRating { sample_id, query_id, score } => Payload::Json(
                json!({ "sample_id": sample_id, "query_id": query_id, "score": score }),
            ),
            Op::SubmitSurvey(score) => Payload::Json(json!({ "score": score })),
            _ => Payload::None,
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data")
}

pub enum Backend {
    Local { kb: Box<KnowledgeBase>, principal: Principal },
    Remote { base: String, token: String, http: reqwest::blocking::Client },
}

impl Backend {
    pub fn remote(base: &str, token: String) -> Self {
        Backend::Remote {
            base: base.trim_end_matches('/').to_string(),
            token,
            http: reqwest::blocking::Client::new(),
        }
    }

    pub fn call(&self, op: &Op) -> Result<Value, ApiError> {
        match self {
            Backend::Local { kb, principal } => local(kb, principal, op).map_err(ApiError::from),
            Backend::Remote { base, token, http } => remote(http, base, token, op),
        }
    }

    /// Flushes local state; the server owns persistence otherwise.
    pub fn finish(&self) -> Result<(), ApiError> {
        match self {
            Backend::Local { kb, .. } => kb.flush().map_err(ApiError::from),
            Backend::Remote { .. } => Ok(()),
        }
    }
}

fn local(kb: &KnowledgeBase, p: &Principal, op: &Op) -> Result<Value, Error> {
    Ok(match op {
        Op::CreateExpert { display_name, domain_tags } => {
            let (expert, token) = kb.create_expert(p, display_name, domain_tags.clone())?;
            json!({ "expert": expert, "token": token })
        }
        Op::GrantConsent(g) => to_json(&kb.grant_consent(p, g.clone())?),
        Op::WithdrawConsent(id) => {
            let (consent, job) = kb.withdraw_consent(p, id)?;
            json!({ "consent": consent, "job": job })
        }
        Op::ExportConsent(id) => to_json(&kb.export_consent(p, id)?),
        Op::ExpireRetention => to_json(&kb.expire_retention(p)?),
        Op::IngestDocument(bytes) => to_json(&kb.ingest_document(p, bytes)?),
        Op::Extract(id) => to_json(&kb.extract(p, id)?),
        Op::ExportQueue(expert) => to_json(&kb.export_queue(p, expert)?),
        Op::ImportQueue(records) => to_json(&kb.import_queue(p, records)?),
        Op::IndexArtifact(id) => to_json(&kb.index_artifact(p, id)?),
        Op::RebuildIndex => to_json(&kb.rebuild_index(p)?),
        Op::Answer { question, filter, k } => to_json(&kb.answer(p, question, filter.clone(), *k)?),
        Op::Feedback { query_id, resolved } => to_json(&kb.record_feedback(p, query_id, *resolved)?),
        Op::RequestErasure(expert) => to_json(&kb.request_erasure(p, *expert)?),
        Op::RetryErasure(id) => to_json(&kb.retry_erasure(p, id)?),
        Op::Alerts => to_json(&kb.alerts(p)?),
        Op::Metrics { from, to } => to_json(&kb.metrics(p, *from, *to)?),
        Op::CreateSample { n, seed } => to_json(&kb.create_sample(p, *n, *seed)?),
        Op::Sample(id) => to_json(&kb.sample(p, id)?),
        Op::RecordRating { sample_id, query_id, score } => {
            to_json(&kb.record_rating(p, sample_id, *query_id, *score, None)?)
        }
        Op::SubmitSurvey(score) => to_json(&kb.submit_survey(p, *score)?),
        Op::VerifyHistory => to_json(&kb.verify_history(p)?),
    })
}

fn transport(message: impl std::fmt::Display) -> ApiError {
    ApiError::new(502, "Transport", message.to_string())
}

fn remote(
    http: &reqwest::blocking::Client,
    base: &str,
    token: &str,
    op: &Op,
) -> Result<Value, ApiError> {
    let route = ROUTES
        .iter()
        .find(|r| r.operation == op.operation())
        .expect("every operation has a route");
    let mut path = route.path.to_string();
    if let (Some(start), Some(param)) = (path.find('{'), op.path_param()) {
        let end = path[start..].find('}').expect("closed placeholder") + start;
        path.replace_range(start..=end, &param);
    }
    let method = reqwest::Method::from_bytes(route.method.as_bytes()).expect("known method");
    let mut req = http
        .request(method, format!("{base}{path}"))
        .bearer_auth(token)
        .query(&op.query());
    req = match op.payload() {
        Payload::None => req,
        Payload::Json(v) => req.json(&v),
        Payload::Raw(bytes, ct) => req.header(reqwest::header::CONTENT_TYPE, ct).body(bytes),
    };
    let resp = req.send().map_err(transport)?;
    let status = resp.status();
    let ndjson = resp
        .headers()
        .get(reqwest::header::CONTENT_TYPE)
        .is_some_and(|v| v.as_bytes().starts_with(b"application/x-ndjson"));
    let text = resp.text().map_err(transport)?;
    if !status.is_success() {
        let mut err: ApiError = serde_json::from_str(&text)
            .unwrap_or_else(|_| ApiError::new(status.as_u16(), "Http", text.clone()));
        err.status = status.as_u16();
        return Err(err);
    }
    if ndjson {
        return import_jsonl(&text).map(|r| to_json(&r)).map_err(transport);
    }
    serde_json::from_str(&text).map_err(transport)
}
