//! Reproducible experiment harness over `qrtls-core`: run configuration,
//! CSV/JSON file formats, model persistence, the training/evaluation
//! pipeline, and the benchmark sweeps behind the CLI.

pub mod config;
pub mod experiments;
pub mod io;
pub mod pipeline;
pub mod report;

pub use config::RunConfig;
