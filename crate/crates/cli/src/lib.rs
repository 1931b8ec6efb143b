//! Configuration and pipeline plumbing behind the `narmap` binary, exposed
//! as a library so integration tests drive the same code paths.

pub mod config;
pub mod pipeline;
