//! File formats, replication engine and command line for independent-set
//! experimental designs.

pub mod benchmark;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod io;
