//! Experiment configuration, artifacts and the offline/online pipeline.

pub mod archive;
pub mod bench;
pub mod config;
pub mod metrics;
pub mod pipeline;

pub use archive::{Archive, ArchiveMatrix};
pub use bench::{bench_speedup, BenchReport};
pub use config::{ExperimentConfig, ProblemConfig};
pub use metrics::{error_measures, ErrorMeasures, ErrorReport};
pub use pipeline::{run_pipeline, Pipeline};
