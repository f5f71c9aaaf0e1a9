//! The `stats` command: how per-image depth statistics spread out as each
//! synthesis step is added.
//!
//! Every stage collects `(mean, std)` per image. The spread of a stage is the
//! determinant of the 2x2 sample covariance of those pairs.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use depthsynth_core::io::{read_index, read_manifest, Manifest};
use depthsynth_core::{image_stats, replay_label, synthesize_label, ImageStats, RelocationFactor, SynthesisConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{PipelineError, Result};
use crate::sources::load_entry;
use crate::synthesize::{label_seed, thread_pool};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Ground truth of labeled entries.
    Original,
    /// Mixed labels, relocation off.
    Interpolation,
    /// Mixed and relocated labels.
    Relocation,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Original, Stage::Interpolation, Stage::Relocation];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Original => "original",
            Stage::Interpolation => "interpolation",
            Stage::Relocation => "relocation",
        }
    }
}

impl FromStr for Stage {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| PipelineError::Config(format!("unknown stage {s:?} (original, interpolation, relocation)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageRow {
    pub image_id: String,
    pub draw: usize,
    pub stats: ImageStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: Stage,
    pub images: Vec<ImageRow>,
    pub spread: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    /// In pipeline order.
    pub stages: Vec<StageReport>,
    pub warnings: Vec<String>,
}

impl DiversityReport {
    pub fn stage(&self, stage: Stage) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    /// Tab-separated rows for plotting: one line per (stage, image).
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("stage\timage_id\tdraw\tmean\tstd\tmad\tvalid_count\n");
        for s in &self.stages {
            for r in &s.images {
                let st = &r.stats;
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    s.stage.name(),
                    r.image_id,
                    r.draw,
                    st.mean,
                    st.std,
                    st.mad,
                    st.valid_count
                );
            }
        }
        out
    }
}

/// Determinant of the sample covariance (`n − 1` denominator) of `(mean, std)`; 0 below two images.
pub fn spread(stats: &[ImageStats]) -> f64 {
    let n = stats.len();
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let mx = stats.iter().map(|s| s.mean).sum::<f64>() / nf;
    let my = stats.iter().map(|s| s.std).sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for s in stats {
        let (dx, dy) = (s.mean - mx, s.std - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let d = nf - 1.0;
    // Cauchy-Schwarz makes the determinant non-negative; clamp rounding.
    ((sxx / d) * (syy / d) - (sxy / d) * (sxy / d)).max(0.0)
}

fn ordered(stages: &[Stage]) -> Vec<Stage> {
    let mut s = stages.to_vec();
    s.sort();
    s.dedup();
    s
}

fn assemble(stages: &[Stage], per_item: Vec<std::result::Result<Vec<(Stage, ImageRow)>, String>>) -> DiversityReport {
    let mut warnings = Vec::new();
    let mut reports: Vec<StageReport> =
        stages.iter().map(|&stage| StageReport { stage, images: Vec::new(), spread: 0.0 }).collect();
    for item in per_item {
        match item {
            Ok(rows) => {
                for (stage, row) in rows {
                    if let Some(r) = reports.iter_mut().find(|r| r.stage == stage) {
                        r.images.push(row);
                    }
                }
            }
            Err(w) => warnings.push(w),
        }
    }
    for r in &mut reports {
        let st: Vec<ImageStats> = r.images.iter().map(|i| i.stats).collect();
        r.spread = spread(&st);
        if r.images.is_empty() {
            warnings.push(format!("stage {} has no images", r.stage.name()));
        }
    }
    DiversityReport { stages: reports, warnings }
}

/// Computes the requested stages by synthesizing one label (draw 0) per entry.
///
/// The interpolation and relocation stages share seeds, so they see the same
/// mixing weights and differ only by θ.
pub fn stats_from_manifest(manifest_path: &Path, cfg: &PipelineConfig, stages: &[Stage]) -> Result<DiversityReport> {
    cfg.validate()?;
    let manifest = read_manifest(manifest_path)?;
    if manifest.entries.is_empty() {
        return Err(PipelineError::EmptyDataset(format!("{} has no entries", manifest_path.display())));
    }
    let stages = ordered(stages);
    let mixing = SynthesisConfig { relocation: false, ..cfg.synthesis.clone() };
    let relocating = SynthesisConfig { relocation: true, ..cfg.synthesis.clone() };

    let per_entry = |i: usize| -> std::result::Result<Vec<(Stage, ImageRow)>, depthsynth_core::Error> {
        let src = load_entry(&manifest, &manifest.entries[i], false)?;
        let seed = label_seed(cfg.global_seed, &src.image_id, 0);
        let row = |stats| ImageRow { image_id: src.image_id.clone(), draw: 0, stats };
        let mut rows = Vec::new();
        for &stage in &stages {
            let map = match stage {
                Stage::Original => match &src.gt {
                    Some(g) => g.clone(),
                    None => continue,
                },
                Stage::Interpolation => synthesize_label(&src.image_id, src.gt.as_ref(), &src.predictions, &mixing, seed)?.0,
                Stage::Relocation => {
                    synthesize_label(&src.image_id, src.gt.as_ref(), &src.predictions, &relocating, seed)?.0
                }
            };
            rows.push((stage, row(image_stats(&map)?)));
        }
        Ok(rows)
    };

    let pool = thread_pool(cfg.workers)?;
    let results: Vec<_> = pool.install(|| {
        (0..manifest.entries.len())
            .into_par_iter()
            .map(|i| per_entry(i).map_err(|e| format!("entry {i} skipped: {e}")))
            .collect()
    });
    Ok(assemble(&stages, results))
}

/// Computes the requested stages for the labels listed in an index by replaying their provenance.
///
/// The original stage lists each source entry once; the other stages list every label.
pub fn stats_from_index(index_path: &Path, stages: &[Stage], workers: Option<usize>) -> Result<DiversityReport> {
    let index = read_index(index_path)?;
    if index.triplets.is_empty() {
        return Err(PipelineError::EmptyDataset(format!("{} lists no labels", index_path.display())));
    }
    let manifest: Manifest = read_manifest(&index.header.manifest)?;
    let stages = ordered(stages);

    let per_label = |t: usize| -> std::result::Result<Vec<(Stage, ImageRow)>, depthsynth_core::Error> {
        let rec = &index.triplets[t].label;
        let entry = manifest.entries.get(rec.entry_index).ok_or_else(|| depthsynth_core::Error::Manifest {
            entry: Some(rec.entry_index),
            message: "index refers to an entry the manifest does not have".into(),
        })?;
        let src = load_entry(&manifest, entry, false)?;
        let row = |stats| ImageRow { image_id: src.image_id.clone(), draw: rec.draw, stats };
        let mut rows = Vec::new();
        for &stage in &stages {
            let map = match stage {
                Stage::Original => match (&src.gt, rec.draw) {
                    (Some(g), 0) => g.clone(),
                    _ => continue,
                },
                Stage::Interpolation => {
                    let mut p = rec.provenance.clone();
                    p.theta = RelocationFactor::IDENTITY;
                    replay_label(src.gt.as_ref(), &src.predictions, &p)?
                }
                Stage::Relocation => replay_label(src.gt.as_ref(), &src.predictions, &rec.provenance)?,
            };
            rows.push((stage, row(image_stats(&map)?)));
        }
        Ok(rows)
    };

    let pool = thread_pool(workers)?;
    let results: Vec<_> = pool.install(|| {
        (0..index.triplets.len())
            .into_par_iter()
            .map(|t| per_label(t).map_err(|e| format!("label {} skipped: {e}", index.triplets[t].label.id)))
            .collect()
    });
    Ok(assemble(&stages, results))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(mean: f64, std: f64) -> ImageStats {
        ImageStats { mean, std, mad: 0.0, valid_count: 1 }
    }

    #[test]
    fn spread_edge_cases() {
        assert_eq!(spread(&[]), 0.0);
        assert_eq!(spread(&[st(1.0, 2.0)]), 0.0);
        // collinear points have a singular covariance
        assert!(spread(&[st(1.0, 1.0), st(2.0, 2.0), st(3.0, 3.0)]).abs() < 1e-12);
        // var(mean) = 1, var(std) = 1, cov = 0
        let s = spread(&[st(0.0, 0.0), st(1.0, 1.0), st(1.0, 0.0), st(0.0, 1.0)]);
        assert!((s - (1.0 / 3.0) * (1.0 / 3.0)).abs() < 1e-12, "{s}");
    }

    #[test]
    fn stage_parsing() {
        assert_eq!("relocation".parse::<Stage>().unwrap(), Stage::Relocation);
        assert!("other".parse::<Stage>().is_err());
        assert_eq!(ordered(&[Stage::Relocation, Stage::Original, Stage::Relocation]), vec![Stage::Original, Stage::Relocation]);
    }
}
