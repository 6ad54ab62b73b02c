//! Configuration, ingestion, pipelines and reproducible output sets.

pub mod config;
pub mod format;
pub mod ingest;
pub mod output;
pub mod pipelines;

pub use config::RunConfig;
pub use ingest::{ingest_dataset, Dataset, DatasetKind};
pub use output::{OutputSet, RunManifest, MANIFEST_FILE};
pub use pipelines::{execute, output_dir, run_pipeline, Pipeline, OUTPUT_ROOT_ENV};
