pub mod evaluation;
pub mod extraction;
pub mod fixture;
pub mod governance;
pub mod ids;
pub mod index;
pub mod ingestion;
pub mod model;
pub mod query;
pub mod store;
