//! Ingestion, dataset storage, figure emission and the `rimkit` command line
//! on top of `rimkit-core`.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod fetch;
pub mod figures;
pub mod ingest;
pub mod table;
