//! File formats, batch execution, reports and the command-line pipeline
//! around `multifi-core`.

pub mod batch;
pub mod cli;
pub mod config;
mod error;
pub mod formats;
pub mod pipeline;
pub mod report;
pub mod svg;

pub use error::{Error, Result};
pub use multifi_core as core;
