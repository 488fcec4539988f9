//! Scenario runner and report emitter for the symplectic index pipeline.

pub mod acceptance;
pub mod orbit_file;
pub mod report_v1;
pub mod scenario;
