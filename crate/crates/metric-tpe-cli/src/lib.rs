//! Experiment harness around the optimizer library: configuration parsing,
//! grid execution across problems, optimizer arms, and seeds, JSON-lines
//! trial logging, and mean/standard-error summaries.

pub mod config;
pub mod record;
pub mod runner;
pub mod summary;
