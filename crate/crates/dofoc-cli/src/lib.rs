//! Command-line front end for the `dofoc-core` solver: TOML problem specs
//! in, CSV trajectories and JSON reports out, plus randomized optimality
//! validation and numerical diagnostics.

pub mod builtins;
pub mod commands;
pub mod csv_io;
pub mod error;
pub mod report;
pub mod spec_file;
