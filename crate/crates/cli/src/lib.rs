//! Experiment layer over the core toolkit: bound reproduction, end-to-end
//! build/prune/verify runs, sub-sum gap analysis, and run manifests.

#![forbid(unsafe_code)]

pub mod manifest;
pub mod pipeline;
pub mod repro;
pub mod subsums;

pub use manifest::{sha256_hex, Manifest};
pub use pipeline::{run_end_to_end, RunConfig, RunOutcome, SpectralChoice};
pub use repro::{repro_examples, ReproRow};
pub use subsums::{subsum_analysis, GapTable, SubsumConfig, SubsumMode};
