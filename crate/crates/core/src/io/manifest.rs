//! Versioned JSON manifest listing images, labels and model predictions.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "entries": [
//!     {
//!       "id": "scene0/000",
//!       "image_path": "rgb/000.png",
//!       "depth_path": "depth/000.png",
//!       "depth_unit": "mm",
//!       "intrinsics": { "fx": 518.8, "fy": 519.4, "cx": 325.5, "cy": 253.7 },
//!       "predictions": [
//!         { "model_id": "relative_a", "path": "pred/a/000.pfm", "scale_kind": "relative" }
//!       ]
//!     }
//!   ]
//! }
//! ```
//!
//! Relative paths resolve against the manifest's directory. `id` defaults to
//! `image_path`; units default to the file format's convention (PNG: mm, PFM: m).

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::io::depth::{DepthFormat, DepthUnit};
use crate::synthesis::ScaleKind;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRef {
    pub model_id: String,
    pub path: PathBuf,
    pub scale_kind: ScaleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<DepthUnit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub image_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_unit: Option<DepthUnit>,
    pub intrinsics: CameraIntrinsics<f64>,
    #[serde(default)]
    pub predictions: Vec<PredictionRef>,
}

impl ManifestEntry {
    /// Identifier used for seeding and reporting.
    pub fn image_id(&self) -> String {
        self.id.clone().unwrap_or_else(|| self.image_path.to_string_lossy().into_owned())
    }

    pub fn is_labeled(&self) -> bool {
        self.depth_path.is_some()
    }

    /// Unit of the ground-truth file.
    pub fn gt_unit(&self) -> Result<Option<DepthUnit>> {
        self.depth_path
            .as_deref()
            .map(|p| Ok(self.depth_unit.unwrap_or(DepthUnit::conventional_for(DepthFormat::from_path(p)?))))
            .transpose()
    }
}

impl PredictionRef {
    pub fn resolved_unit(&self) -> Result<DepthUnit> {
        Ok(self.unit.unwrap_or(DepthUnit::conventional_for(DepthFormat::from_path(&self.path)?)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub entries: Vec<ManifestEntry>,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Self {
        Self { schema_version: MANIFEST_SCHEMA_VERSION, entries, base_dir: PathBuf::new() }
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Checks that every referenced file exists.
    pub fn check_files(&self) -> Result<()> {
        for (i, e) in self.entries.iter().enumerate() {
            let paths = std::iter::once(&e.image_path)
                .chain(e.depth_path.iter())
                .chain(e.predictions.iter().map(|p| &p.path));
            for p in paths {
                let full = self.resolve(p);
                if !full.is_file() {
                    return Err(manifest_err(Some(i), format!("file not found: {}", full.display())));
                }
            }
        }
        Ok(())
    }
}

fn manifest_err(entry: Option<usize>, message: impl Into<String>) -> Error {
    Error::Manifest { entry, message: message.into() }
}

fn validate_entry(i: usize, e: &ManifestEntry) -> Result<()> {
    e.intrinsics.validate().map_err(|err| manifest_err(Some(i), format!("intrinsics: {err}")))?;
    if !e.is_labeled() && e.predictions.is_empty() {
        return Err(manifest_err(Some(i), "unlabeled entry (no depth_path) needs at least one prediction"));
    }
    let mut seen = HashSet::new();
    for p in &e.predictions {
        if p.model_id.is_empty() {
            return Err(manifest_err(Some(i), "prediction with empty model_id"));
        }
        if p.model_id == "gt" {
            return Err(manifest_err(Some(i), "model_id \"gt\" is reserved for ground truth"));
        }
        if !seen.insert(p.model_id.as_str()) {
            return Err(manifest_err(Some(i), format!("duplicate model_id {:?}", p.model_id)));
        }
        p.resolved_unit().map_err(|err| manifest_err(Some(i), format!("prediction {}: {err}", p.model_id)))?;
    }
    e.gt_unit().map_err(|err| manifest_err(Some(i), format!("depth_path: {err}")))?;
    Ok(())
}

/// Parses and validates manifest text without touching the filesystem.
pub fn parse_manifest(text: &str, base_dir: impl Into<PathBuf>) -> Result<Manifest> {
    let root: serde_json::Value =
        serde_json::from_str(text).map_err(|e| manifest_err(None, format!("not valid JSON: {e}")))?;
    let obj = root.as_object().ok_or_else(|| manifest_err(None, "top level must be an object"))?;
    match obj.get("schema_version").and_then(serde_json::Value::as_u64) {
        Some(v) if v == u64::from(MANIFEST_SCHEMA_VERSION) => {}
        Some(v) => return Err(manifest_err(None, format!("unsupported schema_version {v}"))),
        None => return Err(manifest_err(None, "missing field `schema_version`")),
    }
    if let Some(extra) = obj.keys().find(|k| !matches!(k.as_str(), "schema_version" | "entries")) {
        return Err(manifest_err(None, format!("unknown field `{extra}`")));
    }
    let raw = obj
        .get("entries")
        .ok_or_else(|| manifest_err(None, "missing field `entries`"))?
        .as_array()
        .ok_or_else(|| manifest_err(None, "`entries` must be an array"))?;

    let mut entries = Vec::with_capacity(raw.len());
    let mut ids = HashSet::new();
    for (i, v) in raw.iter().enumerate() {
        let e: ManifestEntry = serde_json::from_value(v.clone()).map_err(|err| manifest_err(Some(i), err.to_string()))?;
        validate_entry(i, &e)?;
        if !ids.insert(e.image_id()) {
            return Err(manifest_err(Some(i), format!("duplicate entry id {:?}", e.image_id())));
        }
        entries.push(e);
    }
    Ok(Manifest { schema_version: MANIFEST_SCHEMA_VERSION, entries, base_dir: base_dir.into() })
}

/// Reads, validates and checks that every referenced file exists.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let manifest = parse_manifest(&text, base)?;
    manifest.check_files()?;
    Ok(manifest)
}

pub fn write_manifest(manifest: &Manifest, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(path, text + "\n")?;
    Ok(())
}
