//! Front end for `icselect`: CSV ingestion, JSON reports and the
//! simulation drivers behind the `icselect` binary.

pub mod cli;
pub mod commands;
pub mod csvio;
pub mod json;

pub use commands::{dispatch, Failure};
