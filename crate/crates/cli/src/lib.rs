//! Library side of the `depthlab` binary, shared with its tests.

pub mod analyze;
pub mod commands;
pub mod fixtures;
