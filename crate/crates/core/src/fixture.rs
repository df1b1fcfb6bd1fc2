//! Loader for an annotated demo corpus directory.
//!
//! A corpus directory holds `config.json`, `experts.json`, `queries.json`
//! and a `corpus/` folder of upload files (header, blank line, body).
//! Loading registers each expert with its consent and sessions, ingests
//! every upload in file-name order, and runs extraction.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::governance::{ConsentGrant, ConsentRecord};
use crate::ids::{ArtifactId, ExpertId};
use crate::index::MetadataFilter;
use crate::ingestion::CaptureSession;
use crate::model::{ExpertProfile, Modality};
use crate::store::{Config, Error, IngestReport, KnowledgeBase, Principal, Role};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionFixture {
    pub modality: Modality,
    pub scheduled_minutes: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertFixture {
    pub display_name: String,
    pub domain_tags: Vec<String>,
    pub consent: ConsentGrant,
    #[serde(default)]
    pub sessions: Vec<SessionFixture>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedQuery {
    pub name: String,
    pub principal: String,
    pub question: String,
    #[serde(default)]
    pub filter: Option<MetadataFilter>,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub root: PathBuf,
    pub experts: Vec<ExpertFixture>,
    /// `(file name, upload bytes)` in file-name order.
    pub uploads: Vec<(String, Vec<u8>)>,
    pub queries: Vec<ScriptedQuery>,
}

fn read(path: &Path) -> Result<Vec<u8>, Error> {
    fs::read(path).map_err(|e| Error::Persistence(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Error> {
    serde_json::from_slice(&read(path)?)
        .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

impl Fixture {
    pub fn load(root: impl Into<PathBuf>) -> Result<Self, Error> {
        let root = root.into();
        let corpus = root.join("corpus");
        let mut names: Vec<String> = fs::read_dir(&corpus)
            .map_err(|e| Error::Persistence(format!("{}: {e}", corpus.display())))?
            .filter_map(Result::ok)
            .filter(|e| e.path().is_file())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        let uploads = names
            .into_iter()
            .map(|n| Ok((n.clone(), read(&corpus.join(&n))?)))
            .collect::<Result<_, Error>>()?;
        Ok(Self {
            experts: read_json(&root.join("experts.json"))?,
            queries: read_json(&root.join("queries.json"))?,
            uploads,
            root,
        })
    }

    /// The corpus `config.json`, with the data directory overridden.
    pub fn config(&self, data_dir: Option<PathBuf>) -> Result<Config, Error> {
        let mut config = Config::load(&self.root.join("config.json"))?;
        config.data_dir = data_dir;
        Ok(config)
    }
}

#[derive(Clone, Debug)]
pub struct LoadedExpert {
    pub profile: ExpertProfile,
    pub token: String,
    pub principal: Principal,
    pub consent: ConsentRecord,
    pub sessions: Vec<CaptureSession>,
}

#[derive(Clone, Debug, Default)]
pub struct LoadedFixture {
    /// Keyed by display name.
    pub experts: BTreeMap<String, LoadedExpert>,
    /// `(file name, report)` in ingestion order.
    pub documents: Vec<(String, IngestReport)>,
    pub artifacts: Vec<ArtifactId>,
}

impl LoadedFixture {
    pub fn expert(&self, name: &str) -> &LoadedExpert {
        &self.experts[name]
    }

    pub fn expert_ids(&self) -> impl Iterator<Item = ExpertId> + '_ {
        self.experts.values().map(|e| e.profile.expert_id)
    }
}

pub fn admin() -> Principal {
    Principal::local("admin", Role::Admin)
}

/// Registers experts, consents and sessions, then ingests and extracts
/// every upload.
pub fn load_into(kb: &KnowledgeBase, fixture: &Fixture) -> Result<LoadedFixture, Error> {
    let admin = admin();
    let mut loaded = LoadedFixture::default();
    for e in &fixture.experts {
        let (profile, token) =
            kb.create_expert(&admin, &e.display_name, e.domain_tags.iter().cloned())?;
        let principal = kb.authenticate(&token)?;
        let mut grant = e.consent.clone();
        grant.expert_id = Some(profile.expert_id);
        let consent = kb.grant_consent(&principal, grant)?;
        let sessions = e
            .sessions
            .iter()
            .map(|s| {
                kb.register_session(
                    &principal,
                    profile.expert_id,
                    s.modality,
                    s.scheduled_minutes,
                    consent.consent_id,
                )
            })
            .collect::<Result<_, _>>()?;
        loaded.experts.insert(
            e.display_name.clone(),
            LoadedExpert {
                profile,
                token,
                principal,
                consent,
                sessions,
            },
        );
    }
    for (name, bytes) in &fixture.uploads {
        let report = kb.ingest_document(&admin, bytes)?;
        let owner = loaded
            .experts
            .values()
            .find(|e| e.profile.expert_id == report.expert_id)
            .map(|e| e.principal.clone())
            .unwrap_or_else(|| admin.clone());
        let artifacts = kb.extract(&owner, &report.doc_id)?;
        loaded
            .artifacts
            .extend(artifacts.iter().map(|a| a.artifact_id));
        loaded.documents.push((name.clone(), report));
    }
    Ok(loaded)
}

/// Each expert approves its whole queue; then everything is indexed.
pub fn approve_and_index(kb: &KnowledgeBase, loaded: &LoadedFixture) -> Result<usize, Error> {
    for e in loaded.experts.values() {
        for a in kb.validation_queue(&e.principal, &e.profile.expert_id)? {
            kb.decide(&e.principal, &a.artifact_id, crate::extraction::Verdict::Approve, None)?;
        }
    }
    Ok(kb.rebuild_index(&admin())?.total)
}
