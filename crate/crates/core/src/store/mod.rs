//! The knowledge base: every module operation behind one single-writer,
//! multi-reader store with optional on-disk persistence.

mod auth;
mod config;
mod entropy;
mod error;
mod kb;
mod state;

pub use auth::{hash_token, Principal, Role, TokenEntry};
pub use config::{Config, DeterministicConfig};
pub use error::{Error, ErrorKind};
pub use kb::{
    Backends, DecisionResult, HistoryReport, ImportSummary, IngestReport, KnowledgeBase,
    RebuildSummary, SchedulerReport, OPERATIONS,
};
pub use state::{Alert, AlertKind, Journal, State};
