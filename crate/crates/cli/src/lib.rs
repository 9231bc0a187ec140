pub mod commands;
pub mod config;
pub mod report;

pub use config::{BackendKind, RunConfig, SuiteConfig};

/// Environment variable fixing the number of worker threads.
pub const WORKERS_ENV: &str = "MOYAL_WORKERS";
