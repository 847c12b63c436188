//! The `cbd` command-line tool, as a library so tests can drive it directly.

pub mod app;
pub mod report;
