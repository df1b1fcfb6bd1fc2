//! HTTP front end for the knowledge base.
//!
//! Every route delegates to exactly one [`KnowledgeBase`] operation. Calls
//! run on the blocking pool because the store serialises writers behind a
//! lock; readers proceed concurrently.

mod error;
mod handlers;
mod openapi;
mod routes;

use std::sync::Arc;
use std::time::Duration;

use expert_mind_core::store::{Config, Error, KnowledgeBase};

pub use error::ApiError;
pub use openapi::openapi;
pub use routes::{router, Route, ROUTES};

/// Runs one scheduler pass every `interval` until the runtime stops.
pub fn spawn_scheduler(kb: Arc<KnowledgeBase>, interval: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut ticker = tokio::time::interval(interval);
        ticker.tick().await;
        loop {
            ticker.tick().await;
            let kb = kb.clone();
            match tokio::task::spawn_blocking(move || kb.scheduler_tick()).await {
                Ok(Ok(report)) => {
                    if !report.executed.is_empty() || !report.failed.is_empty() {
                        log::info!(
                            "scheduler: {} erasures complete, {} failed",
                            report.executed.len(),
                            report.failed.len()
                        );
                    }
                }
                Ok(Err(e)) => log::error!("scheduler pass failed: {e}"),
                Err(e) => log::error!("scheduler task panicked: {e}"),
            }
        }
    })
}

/// Opens the store described by `config` and serves it until Ctrl-C.
pub async fn serve(config: Config) -> Result<(), Error> {
    let listen = config.listen.clone();
    let interval = config.scheduler_interval_secs;
    let kb = Arc::new(KnowledgeBase::open(config)?);
    if interval > 0 {
        spawn_scheduler(kb.clone(), Duration::from_secs(interval));
    }
    let listener = tokio::net::TcpListener::bind(&listen)
        .await
        .map_err(|e| Error::Invalid(format!("bind {listen}: {e}")))?;
    log::info!("listening on {listen}");
    axum::serve(listener, router(kb))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::Persistence(format!("server: {e}")))
}
