//! Batch driver for the dagp experiment matrix: candidate listing, local
//! search tables, local optima networks, the GP baseline and merged reports.

pub mod cli;
pub mod commands;
pub mod config;
pub mod manifest;

pub use commands::{execute, Command};
pub use config::{Mode, RunConfig, UsageError};
pub use manifest::Manifest;
