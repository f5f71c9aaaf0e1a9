//! Manifest-driven synthesis of pseudo depth-completion triplets, with
//! diversity statistics and validation of the produced index.

pub mod config;
pub mod error;
pub mod sources;
pub mod stats;
pub mod synthesize;
pub mod validate;

pub use config::{OutputFormat, PipelineConfig, CONFIG_SCHEMA_VERSION};
pub use error::{PipelineError, Result};
pub use stats::{spread, stats_from_index, stats_from_manifest, DiversityReport, Stage, StageReport};
pub use synthesize::{run_synthesize, EntryFailure, SynthesisSummary};
pub use validate::{run_validate, ValidateOptions, ValidationReport, Violation, ViolationKind};
