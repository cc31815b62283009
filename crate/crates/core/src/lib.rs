//! Core algorithms for independent-set experimental designs on networks with
//! interference.
//!
//! A graph is split into an independent set, whose outcomes are analysed, and
//! an auxiliary set, whose treatments are chosen to steer the exposure (share
//! of treated neighbors) each independent unit receives. The crate is `no_std`
//! and only needs `alloc`.
#![no_std]
extern crate alloc;

pub mod assign;
pub mod error;
pub mod estimate;
pub mod graph;
pub mod partition;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use assign::{Assignment, OptimizerOptions, Scope};
pub use error::{Error, Result};
pub use estimate::{Diagnostics, Estimand, EstimateSummary, OlsFit};
pub use graph::{Graph, GraphFamily};
pub use partition::{InterferenceMatrix, Partition, Selection};
pub use simulate::{DesignName, DesignSpec, OutcomeModel, UnitShift};
