//! Command implementations behind the `gforce` binary.

pub mod commands;
pub mod config;
pub mod output;
