#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use expert_mind_core::fixture::{self, Fixture, LoadedFixture};
use expert_mind_core::store::KnowledgeBase;
use expert_mind_server::router;

pub const ADMIN: &str = "fixture-admin-token";
pub const ENG1: &str = "fixture-eng-1-token";
pub const ENG2: &str = "fixture-eng-2-token";

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture() -> Fixture {
    Fixture::load(fixture_dir()).expect("fixture corpus")
}

/// A store with the fixture loaded, approved and indexed.
pub fn loaded_kb(data_dir: Option<PathBuf>) -> (Arc<KnowledgeBase>, LoadedFixture) {
    let fx = fixture();
    let kb = KnowledgeBase::open(fx.config(data_dir).unwrap()).unwrap();
    let loaded = fixture::load_into(&kb, &fx).unwrap();
    fixture::approve_and_index(&kb, &loaded).unwrap();
    (Arc::new(kb), loaded)
}

pub struct Client {
    pub app: Router,
}

pub struct Reply {
    pub status: StatusCode,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body)
            .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }
}

impl Client {
    pub fn new(kb: Arc<KnowledgeBase>) -> Self {
        Self { app: router(kb) }
    }

    pub async fn send(&self, method: &str, uri: &str, token: Option<&str>, body: Option<Vec<u8>>, json: bool) -> Reply {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        if json {
            req = req.header("content-type", "application/json");
        }
        let req = req.body(body.map_or_else(Body::empty, Body::from)).unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        Reply { status, body }
    }

    pub async fn get(&self, uri: &str, token: &str) -> Reply {
        self.send("GET", uri, Some(token), None, false).await
    }

    pub async fn post(&self, uri: &str, token: &str, body: Value) -> Reply {
        self.send("POST", uri, Some(token), Some(serde_json::to_vec(&body).unwrap()), true).await
    }

    pub async fn post_empty(&self, uri: &str, token: &str) -> Reply {
        self.send("POST", uri, Some(token), None, false).await
    }

    pub async fn post_raw(&self, uri: &str, token: &str, body: Vec<u8>) -> Reply {
        self.send("POST", uri, Some(token), Some(body), false).await
    }
}
