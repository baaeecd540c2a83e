//! Library surface of the command-line tool: configuration parsing,
//! result tables, chart generation, and the subcommand implementations.
//! The `heatstat` binary is a thin argument-parsing wrapper over this.

pub mod commands;
pub mod config;
pub mod error;
pub mod svg;
pub mod table;
