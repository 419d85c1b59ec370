//! Dataset handling: ingestion, canonical storage, splitting, batch
//! sampling, and synthetic data.

pub mod ingest;
pub mod sampler;
pub mod series;
pub mod synthetic;

pub use ingest::{ingest, ingest_path, write_long, write_long_path, DataFormat};
pub use sampler::{DualOriginSample, Sampler, SamplerConfig};
pub use series::{split, Dataset, DatasetEntry, Exclusion, SeriesSplit, SplitMode, SplitSpec, TimeSeries};
pub use synthetic::{synthesize, SynthSpec};
