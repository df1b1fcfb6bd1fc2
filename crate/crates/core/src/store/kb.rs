use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use chrono::{DateTime, NaiveDate, Utc};
use parking_lot::{Mutex, RwLock};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::evaluation::{
    compute_metrics, stratified_sample, InteractionLogEntry, MetricsConfig, MetricsReport,
    RaterClass, Rating, ReviewSample, RunningMetrics, RunningSnapshot, SampleCandidate, Stratum,
    SurveyResponse, Window,
};
use crate::extraction::{
    self, confidence_score, extract_artifacts, fingerprint, submit_for_validation,
    ConfidencePolicy, ExtractionBackend, Fingerprint, MarkerExtractor,
    QueueRecord, ValidationDecision, Verdict,
};
use crate::governance::{
    self, ConsentGrant, ConsentRecord, ConsentSigner, ConsentStatus, ErasureFault, ErasureJob,
    ErasureProof, HmacSigner, JobStatus, ResidualProbe, SignedConsent,
};
use crate::ids::{
    ArtifactId, ChunkId, ConsentId, DocId, ExpertId, JobId, PrincipalId, QueryId, SampleId,
    SessionId,
};
use crate::index::{self, record_for, EmbeddingBackend, FlatIndex, HashingEmbedder, MetadataFilter};
use crate::ingestion::{
    check_session_duration, parse_upload, prepare_document, CaptureSession, ChunkParams,
    ExpertRef, IngestError, RedactionRuleSet,
};
use crate::model::{
    transition_state, validate_tag, ArtifactState, AuditSubject, ExpertProfile,
    KnowledgeArtifact, Modality, OwnerOnly, SourceDocument, TranscriptChunk,
};
use crate::query::{self, EngineParams, GenerationBackend, GroundedResponse, MockGenerator, Query};

use super::auth::{hash_token, Principal, Role};
use super::config::Config;
use super::entropy::{Entropy, EntropyState};
use super::state::{Alert, AlertKind, Journal, State, StateView};
use super::Error;

const STATE_FILE: &str = "state.json";
const JOURNAL_FILE: &str = "journal.json";
const INDEX_FILE: &str = "index.xmnd";
const ENTROPY_FILE: &str = "entropy.json";

/// Pluggable model backends.
#[derive(Clone)]
pub struct Backends {
    pub embedder: Arc<dyn EmbeddingBackend>,
    pub extractor: Arc<dyn ExtractionBackend>,
    pub generator: Arc<dyn GenerationBackend>,
    pub signer: Arc<dyn ConsentSigner>,
}

impl Backends {
    /// The deterministic mock backends.
    pub fn mock(config: &Config) -> Self {
        Self {
            embedder: Arc::new(HashingEmbedder::new(config.embedding_dimension)),
            extractor: Arc::new(MarkerExtractor),
            generator: Arc::new(MockGenerator),
            signer: Arc::new(HmacSigner::new(config.signing_key.as_bytes().to_vec())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub doc_id: DocId,
    pub expert_id: ExpertId,
    pub modality: Modality,
    pub capture_date: NaiveDate,
    pub domain_tag: String,
    pub chunks: usize,
    pub redactions: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionResult {
    pub decided: KnowledgeArtifact,
    pub revision: Option<KnowledgeArtifact>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportSummary {
    pub approved: usize,
    pub edited: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RebuildSummary {
    pub reindexed: usize,
    pub newly_indexed: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryReport {
    pub entries: usize,
    pub violation: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulerReport {
    pub expired_consents: Vec<ConsentId>,
    pub executed: Vec<JobId>,
    pub failed: Vec<JobId>,
    pub overdue_alerts: Vec<JobId>,
}

/// Every operation a remote caller can invoke, by method name.
pub const OPERATIONS: &[&str] = &[
    "create_expert",
    "expert",
    "grant_consent",
    "consent",
    "withdraw_consent",
    "export_consent",
    "expire_retention",
    "register_session",
    "ingest_document",
    "extract",
    "validation_queue",
    "export_queue",
    "import_queue",
    "decide",
    "index_artifact",
    "rebuild_index",
    "answer",
    "response",
    "record_feedback",
    "request_erasure",
    "retry_erasure",
    "job",
    "alerts",
    "metrics",
    "create_sample",
    "sample",
    "record_rating",
    "submit_survey",
    "verify_history",
];

pub struct KnowledgeBase {
    config: Config,
    backends: Backends,
    dictionary: Vec<String>,
    static_principals: BTreeMap<String, Principal>,
    data_dir: Option<PathBuf>,
    // Lock order: state, then journal, then entropy.
    state: RwLock<State>,
    journal: Mutex<Journal>,
    entropy: Mutex<Entropy>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Persistence(format!("{}: {e}", path.display()))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Option<T>, Error> {
    match fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| io_err(path, e)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io_err(path, e)),
    }
}

fn forbid(msg: impl Into<String>) -> Error {
    Error::Forbidden(msg.into())
}

fn require_admin(actor: &Principal) -> Result<(), Error> {
    if actor.is_admin() {
        Ok(())
    } else {
        Err(forbid(format!("{} is not an Admin", actor.principal_id)))
    }
}

fn require_admin_or_self(actor: &Principal, expert: &ExpertId) -> Result<(), Error> {
    if actor.is_admin() || actor.is_expert(expert) {
        Ok(())
    } else {
        Err(forbid(format!(
            "{} may not act for expert {expert}",
            actor.principal_id
        )))
    }
}

fn delegates(state: &State, expert: &ExpertId, today: NaiveDate) -> BTreeSet<PrincipalId> {
    state
        .consents
        .values()
        .filter(|c| c.expert_id == *expert && c.is_effective(today))
        .flat_map(|c| c.validation_delegates.iter().cloned())
        .collect()
}

fn live_expert<'a>(state: &'a State, expert: &ExpertId) -> Result<&'a ExpertProfile, Error> {
    let profile = state
        .experts
        .get(expert)
        .ok_or_else(|| Error::not_found("expert", expert))?;
    if profile.is_erased() {
        return Err(Error::ExpertErased(expert.to_string()));
    }
    Ok(profile)
}

impl KnowledgeBase {
    /// Opens a store with the mock backends.
    pub fn open(config: Config) -> Result<Self, Error> {
        let backends = Backends::mock(&config);
        Self::with_backends(config, backends)
    }

    pub fn with_backends(config: Config, backends: Backends) -> Result<Self, Error> {
        ChunkParams::new(config.chunk_window, config.chunk_overlap)?;
        if backends.embedder.dimension() != config.embedding_dimension {
            return Err(Error::Invalid(format!(
                "embedder dimension {} does not match configured {}",
                backends.embedder.dimension(),
                config.embedding_dimension
            )));
        }
        let dictionary = match &config.name_dictionary {
            Some(path) => fs::read_to_string(path)
                .map_err(|e| io_err(path, e))?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect(),
            None => Vec::new(),
        };
        let mut static_principals = BTreeMap::new();
        for entry in &config.tokens {
            let p = entry.to_principal().ok_or_else(|| {
                Error::Invalid(format!("token entry for {} has no token", entry.principal))
            })?;
            static_principals.insert(p.token_hash.clone(), p);
        }

        let mut state = State::new(config.embedding_dimension);
        let mut journal = Journal {
            running: RunningMetrics::new(MetricsConfig {
                accuracy_min_rating: config.accuracy_min_rating,
            }),
            ..Default::default()
        };
        let mut entropy = Entropy::new(config.deterministic.as_ref());
        if let Some(dir) = &config.data_dir {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            if let Some(s) = read_json::<State>(&dir.join(STATE_FILE))? {
                state = s;
            }
            let index_path = dir.join(INDEX_FILE);
            state.index = if index_path.exists() {
                index::file::load(&index_path)?
            } else {
                FlatIndex::new(config.embedding_dimension)
            };
            if state.index.dimension() != config.embedding_dimension {
                return Err(Error::Index(index::IndexError::DimensionMismatch {
                    expected: config.embedding_dimension,
                    got: state.index.dimension(),
                }));
            }
            if let Some(j) = read_json::<Journal>(&dir.join(JOURNAL_FILE))? {
                journal = j;
            }
            if config.deterministic.is_some() {
                if let Some(e) = read_json::<EntropyState>(&dir.join(ENTROPY_FILE))? {
                    entropy.restore(e);
                }
            }
        }
        Ok(Self {
            data_dir: config.data_dir.clone(),
            config,
            backends,
            dictionary,
            static_principals,
            state: RwLock::new(state),
            journal: Mutex::new(journal),
            entropy: Mutex::new(entropy),
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.data_dir.as_deref()
    }

    fn chunk_params(&self) -> ChunkParams {
        ChunkParams::new(self.config.chunk_window, self.config.chunk_overlap)
            .expect("validated at open")
    }

    fn policy(&self) -> ConfidencePolicy {
        ConfidencePolicy {
            validated_floor: self.config.validated_floor,
        }
    }

    fn metrics_config(&self) -> MetricsConfig {
        MetricsConfig {
            accuracy_min_rating: self.config.accuracy_min_rating,
        }
    }

    fn now(&self) -> DateTime<Utc> {
        self.entropy.lock().now()
    }

    fn mint<T>(&self, f: impl FnOnce(&mut dyn RngCore) -> T) -> T {
        f(self.entropy.lock().rng())
    }

    /// Current time of the store clock.
    pub fn clock(&self) -> DateTime<Utc> {
        self.now()
    }

    // ---- persistence -------------------------------------------------

    fn save_entropy(&self) -> Result<(), Error> {
        let Some(dir) = &self.data_dir else {
            return Ok(());
        };
        let Some(snapshot) = self.entropy.lock().export() else {
            return Ok(());
        };
        let bytes = serde_json::to_vec(&snapshot).expect("plain data");
        write_atomic(&dir.join(ENTROPY_FILE), &bytes)
    }

    fn save_state(&self, state: &State) -> Result<(), Error> {
        if let Some(dir) = &self.data_dir {
            let bytes = serde_json::to_vec(state).expect("plain data");
            write_atomic(&dir.join(STATE_FILE), &bytes)?;
            self.save_entropy()?;
        }
        Ok(())
    }

    fn save_index(&self, state: &State) -> Result<(), Error> {
        if let Some(dir) = &self.data_dir {
            let bytes = index::file::encode(&state.index)?;
            write_atomic(&dir.join(INDEX_FILE), &bytes)?;
        }
        Ok(())
    }

    fn save_journal(&self, journal: &Journal) -> Result<(), Error> {
        if let Some(dir) = &self.data_dir {
            let bytes = serde_json::to_vec(journal).expect("plain data");
            write_atomic(&dir.join(JOURNAL_FILE), &bytes)?;
            self.save_entropy()?;
        }
        Ok(())
    }

    /// Writes every file. Used after bulk loads.
    pub fn flush(&self) -> Result<(), Error> {
        let state = self.state.write();
        let journal = self.journal.lock();
        self.save_state(&state)?;
        self.save_index(&state)?;
        self.save_journal(&journal)
    }

    /// Read-only access to the whole store, consistent across both locks.
    pub fn inspect<R>(&self, f: impl FnOnce(&State, &Journal) -> R) -> R {
        let state = self.state.read();
        let journal = self.journal.lock();
        f(&state, &journal)
    }

    // ---- principals --------------------------------------------------

    pub fn authenticate(&self, token: &str) -> Result<Principal, Error> {
        let hash = hash_token(token);
        if let Some(p) = self.static_principals.get(&hash) {
            return Ok(p.clone());
        }
        self.state
            .read()
            .principals
            .get(&hash)
            .cloned()
            .ok_or(Error::Unauthenticated)
    }

    /// Registers an expert and issues the bearer token of its Expert
    /// principal. The token is returned once and only its hash is kept.
    pub fn create_expert(
        &self,
        actor: &Principal,
        display_name: &str,
        domain_tags: impl IntoIterator<Item = String>,
    ) -> Result<(ExpertProfile, String), Error> {
        require_admin(actor)?;
        let display_name = display_name.trim();
        if display_name.is_empty() {
            return Err(Error::Invalid("display name is empty".into()));
        }
        let mut state = self.state.write();
        if state
            .experts
            .values()
            .any(|e| !e.is_erased() && e.display_name == display_name)
        {
            return Err(Error::Invalid(format!(
                "display name {display_name:?} is already registered"
            )));
        }
        let (expert_id, token) = self.mint(|rng| {
            let id = ExpertId::random(rng);
            let mut bytes = [0u8; 24];
            rng.fill_bytes(&mut bytes);
            (id, hex::encode(bytes))
        });
        let profile = ExpertProfile::new(expert_id, display_name, domain_tags, self.now())?;
        let principal = Principal {
            principal_id: PrincipalId::from(expert_id),
            role: Role::Expert,
            token_hash: hash_token(&token),
        };
        state.principals.insert(principal.token_hash.clone(), principal);
        state.experts.insert(expert_id, profile.clone());
        self.save_state(&state)?;
        Ok((profile, token))
    }

    pub fn expert(&self, id: &ExpertId) -> Option<ExpertProfile> {
        self.state.read().experts.get(id).cloned()
    }

    // ---- consent -----------------------------------------------------

    pub fn grant_consent(
        &self,
        actor: &Principal,
        grant: ConsentGrant,
    ) -> Result<ConsentRecord, Error> {
        let expert = grant
            .expert_id
            .ok_or_else(|| Error::Invalid("expert_id is required".into()))?;
        require_admin_or_self(actor, &expert)?;
        let mut state = self.state.write();
        live_expert(&state, &expert)?;
        let id = self.mint(|r| ConsentId::random(r));
        let record = governance::grant_consent(grant, expert, id, self.now())?;
        state.consents.insert(id, record.clone());
        self.save_state(&state)?;
        Ok(record)
    }

    pub fn consent(&self, actor: &Principal, id: &ConsentId) -> Result<ConsentRecord, Error> {
        let state = self.state.read();
        let record = state
            .consents
            .get(id)
            .ok_or_else(|| Error::not_found("consent", id))?;
        require_admin_or_self(actor, &record.expert_id)?;
        Ok(record.clone())
    }

    pub fn export_consent(&self, actor: &Principal, id: &ConsentId) -> Result<SignedConsent, Error> {
        let record = self.consent(actor, id)?;
        Ok(SignedConsent::sign(record, self.backends.signer.as_ref()))
    }

    pub fn verify_consent(&self, signed: &SignedConsent) -> bool {
        signed.verify(self.backends.signer.as_ref())
    }

    /// Withdraws a consent and queues erasure of the expert.
    pub fn withdraw_consent(
        &self,
        actor: &Principal,
        id: &ConsentId,
    ) -> Result<(ConsentRecord, ErasureJob), Error> {
        let mut state = self.state.write();
        let expert = state
            .consents
            .get(id)
            .ok_or_else(|| Error::not_found("consent", id))?
            .expert_id;
        require_admin_or_self(actor, &expert)?;
        let now = self.now();
        let record = state.consents.get_mut(id).expect("checked above");
        record.withdraw(now)?;
        let record = record.clone();
        let job = self.new_job(expert, now);
        state.jobs.insert(job.job_id, job.clone());
        self.save_state(&state)?;
        Ok((record, job))
    }

    fn new_job(&self, expert: ExpertId, now: DateTime<Utc>) -> ErasureJob {
        let (job_id, salt) = self.mint(|rng| {
            let mut salt = [0u8; 16];
            rng.fill_bytes(&mut salt);
            (JobId::random(rng), salt)
        });
        ErasureJob::new(job_id, expert, now, self.config.sla_window_hours, salt)
    }

    /// Marks Active consents past retention as Expired and queues one
    /// erasure job per consent. Running it again the same day is a no-op.
    pub fn expire_retention(&self, actor: &Principal) -> Result<Vec<ErasureJob>, Error> {
        require_admin(actor)?;
        let now = self.now();
        Ok(self.expire_retention_at(now)?.1)
    }

    fn expire_retention_at(
        &self,
        now: DateTime<Utc>,
    ) -> Result<(Vec<ConsentId>, Vec<ErasureJob>), Error> {
        let mut state = self.state.write();
        let today = now.date_naive();
        let due: Vec<ConsentId> = state
            .consents
            .values()
            .filter(|c| c.status == ConsentStatus::Active && c.retention_until < today)
            .map(|c| c.consent_id)
            .collect();
        let mut jobs = Vec::new();
        for id in &due {
            let consent = state.consents.get_mut(id).expect("listed above");
            consent.expire(now)?;
            let job = self.new_job(consent.expert_id, now);
            state.jobs.insert(job.job_id, job.clone());
            jobs.push(job);
        }
        if !due.is_empty() {
            self.save_state(&state)?;
        }
        Ok((due, jobs))
    }

    // ---- capture -----------------------------------------------------

    pub fn register_session(
        &self,
        actor: &Principal,
        expert: ExpertId,
        modality: Modality,
        scheduled_minutes: u32,
        consent_id: ConsentId,
    ) -> Result<CaptureSession, Error> {
        require_admin_or_self(actor, &expert)?;
        let mut state = self.state.write();
        live_expert(&state, &expert)?;
        let today = self.now().date_naive();
        let consent = state
            .consents
            .get(&consent_id)
            .filter(|c| c.expert_id == expert && c.is_effective(today))
            .ok_or(IngestError::ConsentMissing)?;
        if !consent.covers_modality(modality) {
            return Err(IngestError::ConsentScopeViolation(modality).into());
        }
        check_session_duration(modality, scheduled_minutes)?;
        let session = CaptureSession {
            session_id: self.mint(|r| SessionId::random(r)),
            expert_id: expert,
            modality,
            scheduled_minutes,
            consent_id,
        };
        state.sessions.insert(session.session_id, session.clone());
        self.save_state(&state)?;
        Ok(session)
    }

    fn resolve_expert(state: &State, r: &ExpertRef) -> Result<ExpertId, Error> {
        match r {
            ExpertRef::Id(id) => {
                live_expert(state, id)?;
                Ok(*id)
            }
            ExpertRef::Name(name) => {
                let mut matches = state
                    .experts
                    .values()
                    .filter(|e| !e.is_erased() && e.display_name == *name);
                match (matches.next(), matches.next()) {
                    (Some(e), None) => Ok(e.expert_id),
                    (None, _) => Err(Error::not_found("expert", name)),
                    (Some(_), Some(_)) => {
                        Err(Error::Invalid(format!("expert name {name:?} is ambiguous")))
                    }
                }
            }
        }
    }

    fn redaction_rules(&self, state: &State) -> RedactionRuleSet {
        let mut names: Vec<&str> = self.dictionary.iter().map(String::as_str).collect();
        names.extend(
            state
                .experts
                .values()
                .filter(|e| !e.is_erased())
                .map(|e| e.display_name.as_str()),
        );
        RedactionRuleSet::builtin(&names)
    }

    /// Parses an upload (front-matter header plus body), checks consent,
    /// and stores the scrubbed document with its chunks.
    pub fn ingest_document(&self, actor: &Principal, upload: &[u8]) -> Result<IngestReport, Error> {
        let (header, body) = parse_upload(upload)?;
        let mut state = self.state.write();
        let expert = Self::resolve_expert(&state, &header.expert)?;
        require_admin_or_self(actor, &expert)?;
        let profile = live_expert(&state, &expert)?;
        let domain_tag = match &header.domain {
            Some(d) => d.clone(),
            None => profile
                .primary_tag()
                .ok_or(crate::model::ModelError::NoDomainTags)?
                .to_string(),
        };
        validate_tag(&domain_tag)?;
        if !profile.domain_tags.contains(&domain_tag) {
            return Err(Error::Invalid(format!(
                "domain {domain_tag:?} is not one of the expert's tags"
            )));
        }

        let now = self.now();
        let today = now.date_naive();
        let candidates: Vec<&ConsentRecord> = match header.session {
            Some(sid) => {
                let session = state
                    .sessions
                    .get(&sid)
                    .filter(|s| s.expert_id == expert)
                    .ok_or_else(|| Error::not_found("session", sid))?;
                if session.modality != header.modality {
                    return Err(Error::Invalid(format!(
                        "session modality is {}, upload says {}",
                        session.modality, header.modality
                    )));
                }
                state.consents.get(&session.consent_id).into_iter().collect()
            }
            None => state
                .consents
                .values()
                .filter(|c| c.expert_id == expert)
                .collect(),
        };
        let effective: Vec<&ConsentRecord> =
            candidates.into_iter().filter(|c| c.is_effective(today)).collect();
        if effective.is_empty() {
            return Err(IngestError::ConsentMissing.into());
        }
        let by_modality: Vec<&&ConsentRecord> = effective
            .iter()
            .filter(|c| c.covers_modality(header.modality))
            .collect();
        if by_modality.is_empty() {
            return Err(IngestError::ConsentScopeViolation(header.modality).into());
        }
        if !by_modality
            .iter()
            .any(|c| c.scope_domain_tags.contains(&domain_tag))
        {
            return Err(forbid(format!("domain {domain_tag:?} is outside the consent scope")));
        }

        let prepared = prepare_document(body, &self.redaction_rules(&state), self.chunk_params())?;
        if state
            .documents
            .values()
            .any(|d| d.original_byte_hash == prepared.original_byte_hash)
        {
            return Err(IngestError::DuplicateDocument.into());
        }
        let doc_id = self.mint(|r| DocId::random(r));
        let chunks: Vec<TranscriptChunk> = prepared
            .chunks
            .iter()
            .map(|c| TranscriptChunk {
                chunk_id: self.mint(|r| ChunkId::random(r)),
                doc_id,
                seq: c.seq,
                token_span: (c.start_token, c.end_token),
                text: c.text.clone(),
            })
            .collect();
        let doc = SourceDocument {
            doc_id,
            expert_id: expert,
            modality: header.modality,
            capture_date: header.capture_date,
            domain_tag: domain_tag.clone(),
            raw_text: prepared.raw_text,
            original_byte_hash: prepared.original_byte_hash,
            ingest_time: now,
        };
        let report = IngestReport {
            doc_id,
            expert_id: expert,
            modality: header.modality,
            capture_date: header.capture_date,
            domain_tag,
            chunks: chunks.len(),
            redactions: prepared.redactions,
        };
        state.documents.insert(doc_id, doc);
        state.chunks.insert(doc_id, chunks);
        self.save_state(&state)?;
        Ok(report)
    }

    // ---- extraction and validation ----------------------------------

    /// Runs the extraction backend over a document and submits every
    /// artifact to its expert's validation queue.
    pub fn extract(&self, actor: &Principal, doc_id: &DocId) -> Result<Vec<KnowledgeArtifact>, Error> {
        let mut guard = self.state.write();
        let state = &mut *guard;
        let doc = state
            .documents
            .get(doc_id)
            .ok_or_else(|| Error::not_found("document", doc_id))?;
        require_admin_or_self(actor, &doc.expert_id)?;
        live_expert(state, &doc.expert_id)?;
        if state.extracted_docs.contains(doc_id) {
            return Err(Error::AlreadyExtracted(doc_id.to_string()));
        }
        let today = self.now().date_naive();
        if !state
            .consents
            .values()
            .any(|c| c.expert_id == doc.expert_id && c.is_effective(today))
        {
            return Err(IngestError::ConsentMissing.into());
        }
        let chunks = state.chunks.get(doc_id).map(Vec::as_slice).unwrap_or(&[]);
        let extracted = extract_artifacts(
            doc,
            chunks,
            self.backends.extractor.as_ref(),
            &mut state.corroboration,
            || {
                let mut e = self.entropy.lock();
                let id = ArtifactId::random(e.rng());
                (id, e.now())
            },
        )?;
        let mut submitted = Vec::with_capacity(extracted.len());
        let mut touched = BTreeSet::new();
        for artifact in extracted {
            state.audit.record(
                artifact.created_at,
                artifact.artifact_id,
                None,
                ArtifactState::Extracted,
                &actor.principal_id,
            );
            let now = self.now();
            let pending = submit_for_validation(&artifact, &actor.principal_id, &OwnerOnly, now)?;
            state.audit.record(
                now,
                artifact.artifact_id,
                Some(ArtifactState::Extracted),
                ArtifactState::PendingValidation,
                &actor.principal_id,
            );
            touched.insert(fingerprint(&pending.statement));
            state.artifacts.insert(pending.artifact_id, pending);
            submitted.push(pending_id(&submitted, &state.artifacts, artifact.artifact_id));
        }
        state.extracted_docs.insert(*doc_id);
        let index_changed = self.refresh_confidence(state, &touched);
        self.save_state(state)?;
        if index_changed {
            self.save_index(state)?;
        }
        Ok(submitted)
    }

    /// Re-scores every live artifact sharing one of the fingerprints.
    /// Returns whether any indexed metadata changed.
    fn refresh_confidence(&self, state: &mut State, fps: &BTreeSet<Fingerprint>) -> bool {
        if fps.is_empty() {
            return false;
        }
        let policy = self.policy();
        let mut index_changed = false;
        let State {
            artifacts,
            corroboration,
            index,
            ..
        } = state;
        for a in artifacts.values_mut() {
            if matches!(a.state, ArtifactState::Rejected | ArtifactState::Erased)
                || !fps.contains(&fingerprint(&a.statement))
            {
                continue;
            }
            let Ok(c) = confidence_score(a, corroboration, &policy) else {
                continue;
            };
            if c != a.confidence {
                a.confidence = c;
                if a.state == ArtifactState::Indexed {
                    index_changed |= index.update_metadata(&a.artifact_id, |m| m.confidence = c);
                }
            }
        }
        index_changed
    }

    /// Pending artifacts of an expert, oldest first.
    pub fn validation_queue(
        &self,
        actor: &Principal,
        expert: &ExpertId,
    ) -> Result<Vec<KnowledgeArtifact>, Error> {
        let state = self.state.read();
        let today = self.now().date_naive();
        if !(actor.is_admin()
            || actor.is_expert(expert)
            || delegates(&state, expert, today).contains(&actor.principal_id))
        {
            return Err(forbid(format!(
                "{} may not view the queue of {expert}",
                actor.principal_id
            )));
        }
        let mut queue: Vec<KnowledgeArtifact> = state
            .artifacts
            .values()
            .filter(|a| a.expert_id == *expert && a.state == ArtifactState::PendingValidation)
            .cloned()
            .collect();
        queue.sort_by_key(|a| (a.created_at, a.artifact_id));
        Ok(queue)
    }

    pub fn export_queue(&self, actor: &Principal, expert: &ExpertId) -> Result<Vec<QueueRecord>, Error> {
        let queue = self.validation_queue(actor, expert)?;
        let state = self.state.read();
        queue
            .iter()
            .map(|a| QueueRecord::from_artifact(a, &state.corroboration).map_err(Error::from))
            .collect()
    }

    pub fn decide(
        &self,
        actor: &Principal,
        artifact_id: &ArtifactId,
        verdict: Verdict,
        edited_statement: Option<String>,
    ) -> Result<DecisionResult, Error> {
        let mut guard = self.state.write();
        let state = &mut *guard;
        let artifact = state
            .artifacts
            .get(artifact_id)
            .ok_or_else(|| Error::not_found("artifact", artifact_id))?
            .clone();
        let now = self.now();
        let authority: BTreeMap<ExpertId, BTreeSet<PrincipalId>> =
            [(artifact.expert_id, delegates(state, &artifact.expert_id, now.date_naive()))].into();
        let decision = ValidationDecision {
            artifact_id: *artifact_id,
            verdict,
            edited_statement,
            reviewer: actor.principal_id.clone(),
            decided_at: now,
        };
        let outcome = extraction::decide(
            &artifact,
            &decision,
            &authority,
            &self.policy(),
            &mut state.corroboration,
            || self.mint(|r| ArtifactId::random(r)),
        )?;
        state.audit.record(
            now,
            artifact.artifact_id,
            Some(artifact.state),
            outcome.decided.state,
            &actor.principal_id,
        );
        state
            .artifacts
            .insert(outcome.decided.artifact_id, outcome.decided.clone());
        if let Some(rev) = &outcome.revision {
            state.audit.record(
                now,
                rev.artifact_id,
                None,
                ArtifactState::Validated,
                &actor.principal_id,
            );
            state.artifacts.insert(rev.artifact_id, rev.clone());
            let index_changed =
                self.refresh_confidence(state, &[fingerprint(&rev.statement)].into());
            if index_changed {
                self.save_index(state)?;
            }
        }
        state.decisions.push(outcome.record.clone());
        let mut journal = self.journal.lock();
        journal.running.on_decision(verdict);
        self.save_state(state)?;
        self.save_journal(&journal)?;
        Ok(DecisionResult {
            decided: outcome.decided,
            revision: outcome.revision,
        })
    }

    /// Applies an edited queue export: unchanged statements are approved,
    /// changed ones become edits, artifacts no longer pending are skipped.
    pub fn import_queue(&self, actor: &Principal, records: &[QueueRecord]) -> Result<ImportSummary, Error> {
        let mut summary = ImportSummary::default();
        for r in records {
            let current = self
                .state
                .read()
                .artifacts
                .get(&r.artifact_id)
                .cloned()
                .ok_or_else(|| Error::not_found("artifact", r.artifact_id))?;
            if current.state != ArtifactState::PendingValidation {
                summary.skipped += 1;
                continue;
            }
            if r.statement.trim() == current.statement {
                self.decide(actor, &r.artifact_id, Verdict::Approve, None)?;
                summary.approved += 1;
            } else {
                self.decide(actor, &r.artifact_id, Verdict::Edit, Some(r.statement.clone()))?;
                summary.edited += 1;
            }
        }
        Ok(summary)
    }

    // ---- indexing ----------------------------------------------------

    fn index_one(
        &self,
        state: &mut State,
        artifact_id: &ArtifactId,
        actor: &PrincipalId,
    ) -> Result<KnowledgeArtifact, Error> {
        let artifact = state
            .artifacts
            .get(artifact_id)
            .ok_or_else(|| Error::not_found("artifact", artifact_id))?;
        let capture_date = state
            .documents
            .get(&artifact.primary_doc())
            .ok_or_else(|| Error::not_found("document", artifact.primary_doc()))?
            .capture_date;
        let record = record_for(artifact, capture_date, self.backends.embedder.as_ref())?;
        let next = if artifact.state == ArtifactState::Validated {
            let now = self.now();
            let next = transition_state(artifact, ArtifactState::Indexed, actor, &OwnerOnly, now)?;
            state.audit.record(
                now,
                *artifact_id,
                Some(ArtifactState::Validated),
                ArtifactState::Indexed,
                actor,
            );
            next
        } else {
            artifact.clone()
        };
        state.index.upsert(record)?;
        state.artifacts.insert(*artifact_id, next.clone());
        Ok(next)
    }

    pub fn index_artifact(&self, actor: &Principal, artifact_id: &ArtifactId) -> Result<KnowledgeArtifact, Error> {
        let mut state = self.state.write();
        let expert = state
            .artifacts
            .get(artifact_id)
            .ok_or_else(|| Error::not_found("artifact", artifact_id))?
            .expert_id;
        require_admin_or_self(actor, &expert)?;
        let out = self.index_one(&mut state, artifact_id, &actor.principal_id)?;
        self.save_state(&state)?;
        self.save_index(&state)?;
        Ok(out)
    }

    /// Rebuilds the vector index from scratch over every Indexed artifact
    /// and indexes every Validated one.
    pub fn rebuild_index(&self, actor: &Principal) -> Result<RebuildSummary, Error> {
        require_admin(actor)?;
        let mut guard = self.state.write();
        let state = &mut *guard;
        let previous = std::mem::replace(&mut state.index, FlatIndex::new(self.config.embedding_dimension));
        let ids: Vec<(ArtifactId, ArtifactState)> = state
            .artifacts
            .values()
            .filter(|a| a.state.is_validated())
            .map(|a| (a.artifact_id, a.state))
            .collect();
        let mut summary = RebuildSummary::default();
        for (id, prior) in ids {
            if let Err(e) = self.index_one(state, &id, &actor.principal_id) {
                state.index = previous;
                return Err(e);
            }
            match prior {
                ArtifactState::Indexed => summary.reindexed += 1,
                _ => summary.newly_indexed += 1,
            }
        }
        summary.total = state.index.len();
        self.save_state(state)?;
        self.save_index(state)?;
        Ok(summary)
    }

    // ---- querying ----------------------------------------------------

    pub fn answer(
        &self,
        actor: &Principal,
        question: &str,
        filter: Option<MetadataFilter>,
        k: Option<usize>,
    ) -> Result<GroundedResponse, Error> {
        let started = Instant::now();
        let (query_id, asked_at) = {
            let mut e = self.entropy.lock();
            let id = QueryId::random(e.rng());
            (id, e.now())
        };
        let query = Query {
            query_id,
            principal: actor.principal_id.clone(),
            question: question.to_string(),
            filter: filter.unwrap_or_default(),
            k: k.unwrap_or(self.config.k_default),
            asked_at,
        };
        let state = self.state.read();
        let view = StateView {
            state: &state,
            today: asked_at.date_naive(),
        };
        let mut response = query::answer(
            &view,
            self.backends.embedder.as_ref(),
            self.backends.generator.as_ref(),
            &query,
            EngineParams {
                token_budget: self.config.token_budget,
            },
        )?;
        response.latency_ms = started.elapsed().as_millis() as u64;
        let entry = InteractionLogEntry {
            query_id,
            principal: actor.principal_id.clone(),
            asked_at,
            latency_ms: response.latency_ms,
            cited_artifact_ids: response.citations.iter().map(|c| c.artifact_id).collect(),
            resolved_flag: None,
        };
        let mut journal = self.journal.lock();
        journal.running.on_query(&entry);
        journal.entries.push(entry);
        journal.responses.insert(query_id, response.clone());
        self.save_journal(&journal)?;
        Ok(response)
    }

    pub fn record_feedback(
        &self,
        actor: &Principal,
        query_id: &QueryId,
        resolved: bool,
    ) -> Result<InteractionLogEntry, Error> {
        let _state = self.state.read();
        let mut journal = self.journal.lock();
        let entry = journal
            .entries
            .iter_mut()
            .find(|e| e.query_id == *query_id)
            .ok_or(query::QueryError::UnknownQuery(*query_id))?;
        if !(actor.is_admin() || entry.principal == actor.principal_id) {
            return Err(forbid("only the asker or an Admin may give feedback"));
        }
        if entry.resolved_flag.is_some() {
            return Err(query::QueryError::AlreadySet(*query_id).into());
        }
        entry.resolved_flag = Some(resolved);
        let entry = entry.clone();
        if let Some(r) = journal.responses.get_mut(query_id) {
            r.resolved_flag = Some(resolved);
        }
        journal.running.on_feedback(resolved);
        self.save_journal(&journal)?;
        Ok(entry)
    }

    /// A logged response, for its asker or an Admin.
    pub fn response(&self, actor: &Principal, query_id: &QueryId) -> Result<GroundedResponse, Error> {
        let journal = self.journal.lock();
        let entry = journal
            .entries
            .iter()
            .find(|e| e.query_id == *query_id)
            .ok_or(query::QueryError::UnknownQuery(*query_id))?;
        if !(actor.is_admin() || entry.principal == actor.principal_id) {
            return Err(forbid("only the asker or an Admin may read a response"));
        }
        journal
            .responses
            .get(query_id)
            .cloned()
            .ok_or_else(|| query::QueryError::UnknownQuery(*query_id).into())
    }

    // ---- erasure -----------------------------------------------------

    /// Creates an erasure job for the expert and runs it.
    pub fn request_erasure(&self, actor: &Principal, expert: ExpertId) -> Result<ErasureJob, Error> {
        require_admin_or_self(actor, &expert)?;
        let job = {
            let mut state = self.state.write();
            let job = self.new_job(expert, self.now());
            state.jobs.insert(job.job_id, job.clone());
            self.save_state(&state)?;
            job
        };
        self.execute_erasure(&job.job_id, ErasureFault::None)
    }

    /// Runs (or retries) an erasure job. Everything is removed under the
    /// writer lock, so readers see the store before or after, never during.
    /// A residual found by the post-scan leaves the job `Failed` and raises
    /// an alert; the job is returned either way.
    pub fn execute_erasure(&self, job_id: &JobId, fault: ErasureFault) -> Result<ErasureJob, Error> {
        let mut guard = self.state.write();
        let state = &mut *guard;
        let mut journal = self.journal.lock();
        let mut job = state
            .jobs
            .get(job_id)
            .ok_or_else(|| Error::not_found("erasure job", job_id))?
            .clone();
        if job.status == JobStatus::Complete {
            return Ok(job);
        }
        job.status = JobStatus::Running;
        let now = self.now();
        let expert = job.expert_id;
        let expert_principal = PrincipalId::from(expert);
        let eraser = PrincipalId::new(format!("erasure-job:{job_id}"));

        let erased: BTreeMap<ArtifactId, KnowledgeArtifact> = state
            .artifacts
            .iter()
            .filter(|(_, a)| a.expert_id == expert)
            .map(|(id, a)| (*id, a.clone()))
            .collect();
        let erased_ids: BTreeSet<ArtifactId> = erased.keys().copied().collect();
        let docs: BTreeSet<DocId> = state
            .documents
            .values()
            .filter(|d| d.expert_id == expert)
            .map(|d| d.doc_id)
            .collect();
        let mut proof = ErasureProof {
            artifacts: erased.len(),
            documents: docs.len(),
            ..Default::default()
        };

        for a in erased.values() {
            if a.state != ArtifactState::Erased {
                state
                    .audit
                    .record(now, a.artifact_id, Some(a.state), ArtifactState::Erased, &eraser);
            }
        }
        proof.audit_entries_tombstoned =
            state
                .audit
                .tombstone(&erased_ids, expert_principal.as_str(), |s| job.digest(s));
        for d in &mut state.decisions {
            let mut touched = false;
            let mut bury = |subject: &mut AuditSubject| {
                if let AuditSubject::Artifact(id) = subject {
                    if erased_ids.contains(id) {
                        *subject = AuditSubject::Tombstone(job.digest(&id.to_string()));
                        touched = true;
                    }
                }
            };
            bury(&mut d.subject);
            if let Some(r) = d.revision.as_mut() {
                bury(r);
            }
            if d.reviewer == expert_principal.as_str() {
                d.reviewer = format!("tombstone:{}", job.digest(&d.reviewer));
                touched = true;
            }
            proof.decisions_tombstoned += usize::from(touched);
        }

        let spared = match fault {
            ErasureFault::LeaveOneVector => state.index.ids().find(|id| erased_ids.contains(id)).copied(),
            ErasureFault::None => None,
        };
        proof.vectors = state.index.delete_by_expert(&expert, |id, _| {
            (Some(*id) != spared)
                .then(|| erased.get(id).map(|a| a.expert_id))
                .flatten()
        });

        for id in &erased_ids {
            state.artifacts.remove(id);
        }
        for doc in &docs {
            state.documents.remove(doc);
            proof.chunks += state.chunks.remove(doc).map_or(0, |c| c.len());
            state.extracted_docs.remove(doc);
        }
        let sessions_before = state.sessions.len();
        state.sessions.retain(|_, s| s.expert_id != expert);
        proof.sessions = sessions_before - state.sessions.len();
        proof.corroboration_entries = state.corroboration.remove_docs(&docs);
        let fps: BTreeSet<Fingerprint> = erased.values().map(|a| fingerprint(&a.statement)).collect();
        self.refresh_confidence(state, &fps);

        let cites = |ids: &[ArtifactId]| ids.iter().any(|id| erased_ids.contains(id));
        let entries_before = journal.entries.len();
        journal.entries.retain(|e| !cites(&e.cited_artifact_ids));
        proof.log_entries = entries_before - journal.entries.len();
        let responses_before = journal.responses.len();
        journal.responses.retain(|_, r| {
            !cites(&r.citations.iter().map(|c| c.artifact_id).collect::<Vec<_>>())
        });
        proof.cached_responses = responses_before - journal.responses.len();
        journal.running = RunningMetrics::rebuild(
            self.metrics_config(),
            &journal.entries,
            &state.decisions,
            state.samples.values().flat_map(|s| &s.ratings),
            &state.surveys,
        );

        if let Some(profile) = state.experts.remove(&expert) {
            state.experts.insert(expert, profile.into_stub(now));
        }
        proof.artifact_digests = erased_ids.iter().map(|id| job.digest(&id.to_string())).collect();

        // Statements also present in retained material are not residue.
        let retained_text = |s: &str| {
            state.artifacts.values().any(|a| a.statement == s)
                || state.documents.values().any(|d| d.raw_text.contains(s))
        };
        let probe = ResidualProbe {
            artifact_ids: erased_ids.clone(),
            statements: erased
                .values()
                .map(|a| a.statement.clone())
                .filter(|s| !retained_text(s))
                .collect(),
        };

        state.jobs.insert(job.job_id, job.clone());
        self.save_state(state)?;
        self.save_index(state)?;
        self.save_journal(&journal)?;
        let hits = self.residual_scan(state, &journal, &probe)?;

        if hits.is_empty() {
            job.status = JobStatus::Complete;
            proof.completed_at = Some(now);
            proof.residual_scan_clean = true;
            job.proof = Some(proof);
            job.failure = None;
            state.jobs.insert(job.job_id, job.clone());
            self.save_state(state)?;
            log::info!("erasure job {job_id} complete");
            Ok(job)
        } else {
            let summary = hits
                .iter()
                .map(|h| format!("{} in {}", h.what, h.location))
                .collect::<Vec<_>>()
                .join("; ");
            job.status = JobStatus::Failed;
            proof.residual_scan_clean = false;
            job.proof = Some(proof);
            job.failure = Some(summary.clone());
            state.jobs.insert(job.job_id, job.clone());
            state.alerts.push(Alert {
                at: now,
                kind: AlertKind::ErasureFailed,
                job_id: job.job_id,
                message: summary.clone(),
            });
            self.save_state(state)?;
            log::error!("erasure job {job_id} failed its residual scan: {summary}");
            Ok(job)
        }
    }

    fn residual_scan(
        &self,
        state: &State,
        journal: &Journal,
        probe: &ResidualProbe,
    ) -> Result<Vec<governance::ResidualHit>, Error> {
        let mut hits = Vec::new();
        hits.extend(probe.scan("state", &serde_json::to_vec(state).expect("plain data")));
        hits.extend(probe.scan("journal", &serde_json::to_vec(journal).expect("plain data")));
        hits.extend(probe.scan("index", &index::file::encode(&state.index)?));
        if let Some(dir) = &self.data_dir {
            for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
                let path = entry.map_err(|e| io_err(dir, e))?.path();
                if path.is_file() {
                    let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
                    hits.extend(probe.scan(&path.display().to_string(), &bytes));
                }
            }
        }
        Ok(hits)
    }

    /// Re-runs a Pending or Failed job on behalf of its expert or an Admin.
    pub fn retry_erasure(&self, actor: &Principal, job_id: &JobId) -> Result<ErasureJob, Error> {
        self.job(actor, job_id)?;
        self.execute_erasure(job_id, ErasureFault::None)
    }

    pub fn job(&self, actor: &Principal, job_id: &JobId) -> Result<ErasureJob, Error> {
        let state = self.state.read();
        let job = state
            .jobs
            .get(job_id)
            .ok_or_else(|| Error::not_found("erasure job", job_id))?;
        require_admin_or_self(actor, &job.expert_id)?;
        Ok(job.clone())
    }

    pub fn alerts(&self, actor: &Principal) -> Result<Vec<Alert>, Error> {
        require_admin(actor)?;
        Ok(self.state.read().alerts.clone())
    }

    /// One scheduler pass at the store clock.
    pub fn scheduler_tick(&self) -> Result<SchedulerReport, Error> {
        let now = self.now();
        self.scheduler_tick_at(now)
    }

    /// Expires retention, runs pending erasure jobs, and alerts once on
    /// every job still incomplete past its deadline.
    pub fn scheduler_tick_at(&self, now: DateTime<Utc>) -> Result<SchedulerReport, Error> {
        let (expired, _) = self.expire_retention_at(now)?;
        let mut report = SchedulerReport {
            expired_consents: expired,
            ..Default::default()
        };
        let pending: Vec<JobId> = self
            .state
            .read()
            .jobs
            .values()
            .filter(|j| j.status == JobStatus::Pending)
            .map(|j| j.job_id)
            .collect();
        for id in pending {
            match self.execute_erasure(&id, ErasureFault::None)?.status {
                JobStatus::Complete => report.executed.push(id),
                _ => report.failed.push(id),
            }
        }
        let mut state = self.state.write();
        let overdue: Vec<JobId> = state
            .jobs
            .values()
            .filter(|j| j.is_overdue(now) && !j.overdue_alerted)
            .map(|j| j.job_id)
            .collect();
        for id in &overdue {
            let job = state.jobs.get_mut(id).expect("listed above");
            job.overdue_alerted = true;
            let message = format!("erasure job {id} missed its deadline {}", job.deadline);
            log::error!("{message}");
            state.alerts.push(Alert {
                at: now,
                kind: AlertKind::ErasureOverdue,
                job_id: *id,
                message,
            });
        }
        if !overdue.is_empty() {
            self.save_state(&state)?;
        }
        report.overdue_alerts = overdue;
        Ok(report)
    }

    // ---- evaluation --------------------------------------------------

    pub fn metrics(&self, actor: &Principal, from: NaiveDate, to: NaiveDate) -> Result<MetricsReport, Error> {
        require_admin(actor)?;
        let window = Window::new(from, to)?;
        let state = self.state.read();
        let journal = self.journal.lock();
        let ratings: Vec<Rating> = state
            .samples
            .values()
            .flat_map(|s| s.ratings.iter().cloned())
            .collect();
        Ok(compute_metrics(
            &journal.entries,
            &state.decisions,
            &ratings,
            &state.surveys,
            window,
            self.metrics_config(),
        )?)
    }

    pub fn running_metrics(&self) -> RunningSnapshot {
        self.journal.lock().running.snapshot()
    }

    /// Draws a stratified review sample over every logged response.
    pub fn create_sample(&self, actor: &Principal, n: usize, seed: u64) -> Result<ReviewSample, Error> {
        require_admin(actor)?;
        let mut state = self.state.write();
        let population: Vec<SampleCandidate> = {
            let journal = self.journal.lock();
            journal
                .entries
                .iter()
                .map(|e| {
                    let first = e.cited_artifact_ids.first().and_then(|id| state.artifacts.get(id));
                    SampleCandidate {
                        query_id: e.query_id,
                        stratum: first.map_or_else(Stratum::ungrounded, |a| Stratum {
                            artifact_type: Some(a.artifact_type),
                            domain_tag: Some(a.domain_tag.clone()),
                        }),
                    }
                })
                .collect()
        };
        let id = self.mint(|r| SampleId::random(r));
        let sample = stratified_sample(&population, n, seed, id)?;
        state.samples.insert(id, sample.clone());
        self.save_state(&state)?;
        Ok(sample)
    }

    pub fn sample(&self, actor: &Principal, id: &SampleId) -> Result<ReviewSample, Error> {
        if actor.is_admin() || actor.role == Role::Expert {
            return self
                .state
                .read()
                .samples
                .get(id)
                .cloned()
                .ok_or_else(|| Error::not_found("sample", id));
        }
        Err(forbid("only Admins and experts may read review samples"))
    }

    pub fn record_rating(
        &self,
        actor: &Principal,
        sample_id: &SampleId,
        query_id: QueryId,
        score: u8,
        rater_class: Option<RaterClass>,
    ) -> Result<Rating, Error> {
        let class = rater_class.unwrap_or(match actor.role {
            Role::Expert => RaterClass::Expert,
            _ => RaterClass::Annotator,
        });
        let now = self.now();
        let mut state = self.state.write();
        let sample = state
            .samples
            .get_mut(sample_id)
            .ok_or(crate::evaluation::EvalError::UnknownSample(*sample_id))?;
        let rating = sample
            .record_rating(query_id, score, actor.principal_id.clone(), class, now)?
            .clone();
        let mut journal = self.journal.lock();
        journal.running.on_rating(&rating);
        self.save_state(&state)?;
        self.save_journal(&journal)?;
        Ok(rating)
    }

    pub fn submit_survey(&self, actor: &Principal, score: u8) -> Result<SurveyResponse, Error> {
        let response = SurveyResponse::new(actor.principal_id.clone(), score, self.now())?;
        let mut state = self.state.write();
        state.surveys.push(response.clone());
        let mut journal = self.journal.lock();
        journal.running.on_survey(score);
        self.save_state(&state)?;
        self.save_journal(&journal)?;
        Ok(response)
    }

    // ---- audit ---------------------------------------------------------

    /// Replays the lifecycle log through the state machine.
    pub fn verify_history(&self, actor: &Principal) -> Result<HistoryReport, Error> {
        require_admin(actor)?;
        let state = self.state.read();
        let entries = state.audit.entries().len();
        Ok(match state.audit.verify_history() {
            Ok(()) => HistoryReport { entries, violation: None },
            Err(v) => HistoryReport { entries, violation: Some(v.to_string()) },
        })
    }
}

fn pending_id(
    _done: &[KnowledgeArtifact],
    artifacts: &BTreeMap<ArtifactId, KnowledgeArtifact>,
    id: ArtifactId,
) -> KnowledgeArtifact {
    artifacts[&id].clone()
}
