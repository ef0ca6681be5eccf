//! Video ingest, manifests, feature cache, configuration and result files.

pub mod cache;
pub mod config;
pub mod fixtures;
pub mod manifest;
pub mod results;
pub mod svg;
pub mod video;

pub use cache::{FeatureCache, CACHE_MAGIC};
pub use config::{Config, EvalConfig, ExtractConfig};
pub use fixtures::{make_fixture, FixtureKind, FixtureParams, FixturePair, GroundTruth};
pub use manifest::{Manifest, ManifestEntry};
pub use video::{ingest, VideoFormat, VideoSource};
