//! Configuration, verification suite and commands behind the `implab`
//! binary.

pub mod commands;
pub mod config;
pub mod suite;
