//! Staged, resumable study runs.

mod config;
mod stages;
mod store;

pub use config::{hex, LearnerSettings, RunConfig, SplitSettings, VarselectSettings};
pub use stages::{champion, resume_command, run_pipeline, RunSummary, Stage, StageStatus, CONFIG_COPY, MANIFEST};
pub use store::{content_hash, read_supervised, sha256_hex, write_supervised};
