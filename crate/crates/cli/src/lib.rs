//! Library surface of the batch driver, exposed so the pipelines are
//! testable without spawning the binary.

pub mod config;
pub mod pipeline;
pub mod report;
pub mod svg;
