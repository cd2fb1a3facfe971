//! Configuration, verification suites and subcommand bodies behind the
//! `ou-resolvent` binary.

pub mod commands;
pub mod config;
pub mod verify;

pub use config::{ConfigError, RunConfig};
pub use verify::{LemmaId, LemmaReport};
