//! Batch front end for the judging pipeline: configuration, record file
//! formats, and the subcommand implementations.

pub mod commands;
pub mod config;
pub mod records;
