//! Run configuration, read from TOML.
//!
//! ```toml
//! schema_version = 1
//! global_seed = 7
//! labels_per_image = 2
//! sparse_per_label = 3
//! workers = 8
//!
//! [output]
//! format = "pfm"
//!
//! [synthesis]
//! p_interpolation = 1.0
//! theta_range = [0.5, 2.0]
//!
//! [[samplers]]
//! kind = "uniform"
//! rho = 0.01
//!
//! [[samplers]]
//! kind = "lidar"
//! beams = 16
//! ```
//!
//! Sparse map `m` of every label uses `samplers[m % samplers.len()]`.

use std::path::Path;

use depthsynth_core::io::{DepthFormat, DepthUnit};
use depthsynth_core::{SamplerSpec, SynthesisConfig};
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFormat {
    #[serde(default = "default_format")]
    pub format: DepthFormat,
    /// Defaults to the format's convention (PNG: mm, PFM: m).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<DepthUnit>,
}

fn default_format() -> DepthFormat {
    DepthFormat::Pfm
}

impl Default for OutputFormat {
    fn default() -> Self {
        Self { format: default_format(), unit: None }
    }
}

impl OutputFormat {
    pub fn unit(&self) -> DepthUnit {
        self.unit.unwrap_or(DepthUnit::conventional_for(self.format))
    }
}

fn default_schema() -> u32 {
    CONFIG_SCHEMA_VERSION
}
fn one() -> usize {
    1
}
fn default_samplers() -> Vec<SamplerSpec> {
    vec![SamplerSpec::Uniform { rho: None }]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default)]
    pub synthesis: SynthesisConfig,
    #[serde(default = "default_samplers")]
    pub samplers: Vec<SamplerSpec>,
    /// N: pseudo labels per image.
    #[serde(default = "one")]
    pub labels_per_image: usize,
    /// M: sparse maps per label.
    #[serde(default = "one")]
    pub sparse_per_label: usize,
    #[serde(default)]
    pub global_seed: u64,
    /// Worker threads; all cores when unset. Never affects outputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: OutputFormat,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            synthesis: SynthesisConfig::default(),
            samplers: default_samplers(),
            labels_per_image: 1,
            sparse_per_label: 1,
            global_seed: 0,
            workers: None,
            output: OutputFormat::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            PipelineError::Config(m) => PipelineError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable in TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(PipelineError::Config(format!("unsupported schema_version {}", self.schema_version)));
        }
        if self.labels_per_image == 0 || self.sparse_per_label == 0 {
            return Err(PipelineError::Config("labels_per_image and sparse_per_label must be at least 1".into()));
        }
        if self.samplers.is_empty() {
            return Err(PipelineError::Config("at least one sampler is required".into()));
        }
        if self.workers == Some(0) {
            return Err(PipelineError::Config("workers must be at least 1".into()));
        }
        self.synthesis.validate()?;
        for s in &self.samplers {
            s.validate()?;
        }
        Ok(())
    }

    /// Sampler used for sparse map `m` of every label.
    pub fn sampler_for(&self, m: usize) -> &SamplerSpec {
        &self.samplers[m % self.samplers.len()]
    }

    /// The configuration as recorded in an index header; omits the worker count.
    pub fn recorded(&self) -> serde_json::Value {
        let cfg = Self { workers: None, ..self.clone() };
        serde_json::to_value(cfg).expect("config serializes")
    }
}
