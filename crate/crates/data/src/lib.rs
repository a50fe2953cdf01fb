//! Datasets for the M runtime: columnar tables, batching, CSV and JSONL
//! ingestion, splitting, and the deterministic synthetic generators used by
//! the example workflows.

mod dataset;
mod error;
mod ingest;
mod split;
mod synth;
mod text;

pub use dataset::{Batch, Column, ColumnData, ColumnKind, Dataset, DEFAULT_BATCH_SIZE};
pub use error::DataError;
pub use ingest::{load_csv, load_jsonl};
pub use split::train_test_split;
pub use synth::{
    synthetic_images, synthetic_series, synthetic_series_with_noise, synthetic_text, IMAGE_SIDE,
    SERIES_NOISE,
};
pub use text::tokenize;
