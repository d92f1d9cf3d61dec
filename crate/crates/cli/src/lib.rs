//! Command-line front end, the annotation service and a mock backend worker.

pub mod args;
mod artifacts;
pub mod commands;
pub mod exit;
pub mod serve;
mod setup;
pub mod worker;

pub use artifacts::{ImageRecord, RunRecord, Timing, RUN_RECORD};
