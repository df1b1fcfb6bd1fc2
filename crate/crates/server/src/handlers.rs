use std::str::FromStr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, FromRequestParts, Path, Query, Request, State};
use axum::http::header::{AUTHORIZATION, CONTENT_TYPE};
use axum::http::request::Parts;
use axum::response::{IntoResponse, Response};
use axum::Json;
use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use expert_mind_core::evaluation::RaterClass;
use expert_mind_core::extraction::{export_jsonl, import_jsonl, Verdict};
use expert_mind_core::governance::{ConsentGrant, ConsentRecord, ErasureJob};
use expert_mind_core::ids::{ConsentId, ExpertId, QueryId, SampleId};
use expert_mind_core::index::MetadataFilter;
use expert_mind_core::model::{ExpertProfile, Modality};
use expert_mind_core::store::{Error, KnowledgeBase, Principal};

use crate::ApiError;

pub type Kb = State<Arc<KnowledgeBase>>;
type Reply<T> = Result<Json<T>, ApiError>;

/// The principal behind the request's bearer token.
pub struct Auth(pub Principal);

impl FromRequestParts<Arc<KnowledgeBase>> for Auth {
    type Rejection = ApiError;

    async fn from_request_parts(
        parts: &mut Parts,
        kb: &Arc<KnowledgeBase>,
    ) -> Result<Self, Self::Rejection> {
        let token = parts
            .headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .ok_or(Error::Unauthenticated)?;
        Ok(Auth(kb.authenticate(token)?))
    }
}

/// JSON body whose rejections use the API error shape.
pub struct Body<T>(pub T);

impl<T: DeserializeOwned, S: Send + Sync> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(v)| Body(v))
            .map_err(|e: JsonRejection| ApiError::bad_request(e.body_text()))
    }
}

fn id<T: FromStr>(kind: &str, raw: &str) -> Result<T, ApiError>
where
    T::Err: std::fmt::Display,
{
    raw.parse()
        .map_err(|e| ApiError::bad_request(format!("{kind} id {raw:?}: {e}")))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, Error> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(500, "Internal", e.to_string()))?
        .map_err(ApiError::from)
}

async fn json<T: Send + 'static>(f: impl FnOnce() -> Result<T, Error> + Send + 'static) -> Reply<T> {
    blocking(f).await.map(Json)
}

// ---- experts and consent ------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewExpert {
    display_name: String,
    #[serde(default)]
    domain_tags: Vec<String>,
}

#[derive(Serialize)]
pub struct CreatedExpert {
    expert: ExpertProfile,
    /// Bearer token of the expert principal; shown only once.
    token: String,
}

pub async fn create_expert(State(kb): Kb, Auth(p): Auth, Body(b): Body<NewExpert>) -> Reply<CreatedExpert> {
    json(move || {
        let (expert, token) = kb.create_expert(&p, &b.display_name, b.domain_tags)?;
        Ok(CreatedExpert { expert, token })
    })
    .await
}

pub async fn expert(State(kb): Kb, Auth(_): Auth, Path(raw): Path<String>) -> Reply<ExpertProfile> {
    let expert: ExpertId = id("expert", &raw)?;
    json(move || kb.expert(&expert).ok_or_else(|| Error::not_found("expert", expert))).await
}

pub async fn grant_consent(State(kb): Kb, Auth(p): Auth, Body(g): Body<ConsentGrant>) -> Reply<ConsentRecord> {
    json(move || kb.grant_consent(&p, g)).await
}

pub async fn consent(State(kb): Kb, Auth(p): Auth, Path(raw): Path<String>) -> Reply<ConsentRecord> {
    let cid: ConsentId = id("consent", &raw)?;
    json(move || kb.consent(&p, &cid)).await
}

#[derive(Serialize)]
pub struct Withdrawal {
    consent: ConsentRecord,
    job: ErasureJob,
}

pub async fn withdraw_consent(State(kb): Kb, Auth(p): Auth, Path(raw): Path<String>) -> Reply<Withdrawal> {
    let cid: ConsentId = id("consent", &raw)?;
    json(move || {
        let (consent, job) = kb.withdraw_consent(&p, &cid)?;
        Ok(Withdrawal { consent, job })
    })
    .await
}

pub async fn export_consent(State(kb): Kb, Auth(p): Auth, Path(raw): Path<String>) -> Result<Response, ApiError> {
    let cid: ConsentId = id("consent", &raw)?;
    Ok(json(move || kb.export_consent(&p, &cid)).await?.into_response())
}

pub async fn expire_retention(State(kb): Kb, Auth(p): Auth) -> Reply<Vec<ErasureJob>> {
    json(move || kb.expire_retention(&p)).await
}

// ---- capture and validation ---------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewSession {
    expert_id: ExpertId,
    modality: Modality,
    scheduled_minutes: u32,
    consent_id: ConsentId,
}

pub async fn register_session(State(kb): Kb, Auth(p): Auth, Body(b): Body<NewSession>) -> Result<Response, ApiError> {
    let r = json(move || {
        kb.register_session(&p, b.expert_id, b.modality, b.scheduled_minutes, b.consent_id)
    })
    .await?;
    Ok(r.into_response())
}

/// The body is the raw upload: `key: value` header, a blank line, the text.
pub async fn ingest_document(State(kb): Kb, Auth(p): Auth, body: Bytes) -> Result<Response, ApiError> {
    Ok(json(move || kb.ingest_document(&p, &body)).await?.into_response())
}

pub async fn extract(State(kb): Kb, Auth(p): Auth, Path(raw): Path<String>) -> Result<Response, ApiError> {
    let doc = id("document", &raw)?;
    Ok(json(move || kb.extract(&p, &doc)).await?.into_response())
}

#[derive(Deserialize)]
pub struct ExpertParam {
    expert: String,
}

pub async fn validation_queue(State(kb): Kb, Auth(p): Auth, Query(q): Query<ExpertParam>) -> Result<Response, ApiError> {
    let expert: ExpertId = id("expert", &q.expert)?;
    Ok(json(move || kb.validation_queue(&p, &expert)).await?.into_response())
}

/// One JSON queue record per line.
pub async fn export_queue(State(kb): Kb, Auth(p): Auth, Query(q): Query<ExpertParam>) -> Result<Response, ApiError> {
    let expert: ExpertId = id("expert", &q.expert)?;
    let records = blocking(move || kb.export_queue(&p, &expert)).await?;
    Ok(([(CONTENT_TYPE, "application/x-ndjson")], export_jsonl(&records)).into_response())
}

pub async fn import_queue(State(kb): Kb, Auth(p): Auth, body: String) -> Result<Response, ApiError> {
    let records = import_jsonl(&body).map_err(|e| ApiError::bad_request(format!("queue records: {e}")))?;
    Ok(json(move || kb.import_queue(&p, &records)).await?.into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionBody {
    verdict: Verdict,
    #[serde(default)]
    edited_statement: Option<String>,
}

pub async fn decide(State(kb): Kb, Auth(p): Auth, Path(raw): Path<String>, Body(b): Body<DecisionBody>) -> Result<Response, ApiError> {
    let artifact = id("artifact", &raw)?;
    Ok(json(move || kb.decide(&p, &artifact, b.verdict, b.edited_statement))
        .await?
        .into_response())
}

pub async fn index_artifact(State(kb): Kb, Auth(p): Auth, Path(raw): Path<String>) -> Result<Response, ApiError> {
    let artifact = id("artifact", &raw)?;
    Ok(json(move || kb.index_artifact(&p, &artifact)).await?.into_response())
}

pub async fn rebuild_index(State(kb): Kb, Auth(p): Auth) -> Result<Response, ApiError> {
    Ok(json(move || kb.rebuild_index(&p)).await?.into_response())
}

// ---- querying -------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryBody {
    pub question: String,
    #[serde(default)]
    pub filter: Option<MetadataFilter>,
    #[serde(default)]
    pub k: Option<usize>,
}

pub async fn answer(State(kb): Kb, Auth(p): Auth, Body(b): Body<QueryBody>) -> Result<Response, ApiError> {
    Ok(json(move || kb.answer(&p, &b.question, b.filter, b.k)).await?.into_response())
}

pub async fn response(State(kb): Kb, Auth(p): Auth, Path(raw): Path<String>) -> Result<Response, ApiError> {
    let q: QueryId = id("query", &raw)?;
    Ok(json(move || kb.response(&p, &q)).await?.into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackBody {
    resolved: bool,
}

pub async fn record_feedback(State(kb): Kb, Auth(p): Auth, Path(raw): Path<String>, Body(b): Body<FeedbackBody>) -> Result<Response, ApiError> {
    let q: QueryId = id("query", &raw)?;
    Ok(json(move || kb.record_feedback(&p, &q, b.resolved)).await?.into_response())
}

// ---- erasure ----------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErasureBody {
    expert_id: ExpertId,
}

pub async fn request_erasure(State(kb): Kb, Auth(p): Auth, Body(b): Body<ErasureBody>) -> Result<Response, ApiError> {
    Ok(json(move || kb.request_erasure(&p, b.expert_id)).await?.into_response())
}

pub async fn retry_erasure(State(kb): Kb, Auth(p): Auth, Path(raw): Path<String>) -> Result<Response, ApiError> {
    let job = id("job", &raw)?;
    Ok(json(move || kb.retry_erasure(&p, &job)).await?.into_response())
}

pub async fn job(State(kb): Kb, Auth(p): Auth, Path(raw): Path<String>) -> Result<Response, ApiError> {
    let job = id("job", &raw)?;
    Ok(json(move || kb.job(&p, &job)).await?.into_response())
}

pub async fn alerts(State(kb): Kb, Auth(p): Auth) -> Result<Response, ApiError> {
    Ok(json(move || kb.alerts(&p)).await?.into_response())
}

// ---- evaluation -------------------------------------------------------------

#[derive(Deserialize)]
pub struct WindowParams {
    from: NaiveDate,
    to: NaiveDate,
}

pub async fn metrics(State(kb): Kb, Auth(p): Auth, Query(w): Query<WindowParams>) -> Result<Response, ApiError> {
    Ok(json(move || kb.metrics(&p, w.from, w.to)).await?.into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleBody {
    n: usize,
    seed: u64,
}

pub async fn create_sample(State(kb): Kb, Auth(p): Auth, Body(b): Body<SampleBody>) -> Result<Response, ApiError> {
    Ok(json(move || kb.create_sample(&p, b.n, b.seed)).await?.into_response())
}

pub async fn sample(State(kb): Kb, Auth(p): Auth, Path(raw): Path<String>) -> Result<Response, ApiError> {
    let s: SampleId = id("sample", &raw)?;
    Ok(json(move || kb.sample(&p, &s)).await?.into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatingBody {
    sample_id: SampleId,
    query_id: QueryId,
    score: u8,
    #[serde(default)]
    rater_class: Option<RaterClass>,
}

pub async fn record_rating(State(kb): Kb, Auth(p): Auth, Body(b): Body<RatingBody>) -> Result<Response, ApiError> {
    Ok(json(move || kb.record_rating(&p, &b.sample_id, b.query_id, b.score, b.rater_class))
        .await?
        .into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyBody {
    score: u8,
}

pub async fn submit_survey(State(kb): Kb, Auth(p): Auth, Body(b): Body<SurveyBody>) -> Result<Response, ApiError> {
    Ok(json(move || kb.submit_survey(&p, b.score)).await?.into_response())
}

pub async fn verify_history(State(kb): Kb, Auth(p): Auth) -> Result<Response, ApiError> {
    Ok(json(move || kb.verify_history(&p)).await?.into_response())
}
