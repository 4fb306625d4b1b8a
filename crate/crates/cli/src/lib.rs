//! Batch front end for the memsde laboratory.
//!
//! The binary parses one TOML experiment description ([`config`]), dispatches
//! a subcommand ([`commands`]) and closes the run with a hashed artifact
//! manifest ([`manifest`]).  Exit codes separate three outcomes: 0 when the
//! run and every check succeeded, 2 when the run succeeded but a theory
//! check failed, 1 on configuration or runtime errors.

pub mod commands;
pub mod config;
pub mod manifest;
