//! Batch experiments over clustered-node spectra: manifests, sweeps,
//! single-configuration reports and inequality suites.

pub mod manifest;
pub mod report;
pub mod runner;
pub mod single;

pub use manifest::{ExperimentKind, ExperimentManifest, GridPoint};
pub use runner::{ResultRow, RunOptions, SweepSummary};
