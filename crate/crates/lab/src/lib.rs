//! Batch laboratory on top of `edgelab-core`: configuration, campaigns, persisted outputs.

pub mod campaign;
pub mod cli;
pub mod config;
pub mod output;
