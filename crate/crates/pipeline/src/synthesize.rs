//! The `synthesize` command: manifest in, pseudo triplets plus index out.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use depthsynth_core::io::{
    decode_depth, encode_depth, read_manifest, write_triplets, IndexHeader, LabelRecord, Manifest, ManifestEntry,
    SparseRecord, TripletRecord, INDEX_SCHEMA_VERSION,
};
use depthsynth_core::samplers::{sample, SampleContext};
use depthsynth_core::{derive_seed, seeded_rng, synthesize_label, AlignmentMode, DepthMap, Error, ScaleKind};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{PipelineError, Result};
use crate::sources::load_entry;

pub const LABEL_DIR: &str = "labels";
pub const SPARSE_DIR: &str = "sparse";

/// Seed for label `draw` of an image.
pub fn label_seed(global_seed: u64, image_id: &str, draw: usize) -> u64 {
    derive_seed(global_seed, image_id, draw as u64)
}

/// Seed for the points of sparse map `m` of a label.
pub fn sparse_seed(label_seed: u64, m: usize) -> u64 {
    derive_seed(label_seed, "sparse", m as u64)
}

/// Seed for drawing randomized sampler parameters (e.g. ρ) of sparse map `m`.
fn sparse_param_seed(label_seed: u64, m: usize) -> u64 {
    derive_seed(label_seed, "sparse-params", m as u64)
}

pub fn label_id(entry_index: usize, draw: usize) -> String {
    format!("{entry_index:06}_{draw}")
}

pub fn sparse_id(entry_index: usize, draw: usize, m: usize) -> String {
    format!("{entry_index:06}_{draw}_{m}")
}

#[derive(Clone, Debug, Serialize)]
pub struct EntryFailure {
    pub entry_index: usize,
    pub entry_id: String,
    pub code: &'static str,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SynthesisSummary {
    pub index_path: PathBuf,
    pub entries: usize,
    pub entries_ok: usize,
    pub labels: usize,
    pub sparse_maps: usize,
    pub warnings: Vec<String>,
    pub failures: Vec<EntryFailure>,
    pub elapsed_secs: f64,
    /// Entries processed (including failures) per second of wall time.
    pub images_per_sec: f64,
}

impl SynthesisSummary {
    pub fn partial_failure(&self) -> bool {
        !self.failures.is_empty()
    }
}

struct EntryOutput {
    triplets: Vec<TripletRecord>,
    warnings: Vec<String>,
}

fn write_file(path: &Path, bytes: &[u8]) -> std::result::Result<(), Error> {
    std::fs::write(path, bytes).map_err(Error::Io)
}

fn process_entry(
    manifest: &Manifest,
    cfg: &PipelineConfig,
    out_dir: &Path,
    entry_index: usize,
    entry: &ManifestEntry,
) -> std::result::Result<EntryOutput, Error> {
    let needs_image = cfg.samplers.iter().any(|s| s.needs_image());
    let src = load_entry(manifest, entry, needs_image)?;
    let (format, unit) = (cfg.output.format, cfg.output.unit());
    let ext = format.extension();
    let mut warnings = Vec::new();
    let mut triplets = Vec::with_capacity(cfg.labels_per_image);

    for n in 0..cfg.labels_per_image {
        let seed = label_seed(cfg.global_seed, &src.image_id, n);
        let (label, provenance) =
            synthesize_label(&src.image_id, src.gt.as_ref(), &src.predictions, &cfg.synthesis, seed)?;
        let id = label_id(entry_index, n);
        if n == 0 {
            for a in &provenance.alignment {
                if a.fallback {
                    warnings.push(format!("{id}: {} has zero variance, fell back to median scaling", a.model_id));
                }
                let relative =
                    src.predictions.iter().any(|p| p.model_id == a.model_id && p.scale_kind == ScaleKind::Relative);
                if relative && a.requested != AlignmentMode::None && a.reference.is_none() {
                    warnings.push(format!("{id}: relative prediction {} left unaligned (no metric reference)", a.model_id));
                }
            }
        }
        if provenance.exceeds_depth_max {
            warnings.push(format!("{id}: label exceeds depth_max {} m", cfg.synthesis.depth_max));
        }

        // Sample from the label as stored, so sparse values match the file exactly.
        let bytes = encode_depth(&label, format, unit)?;
        let rel = PathBuf::from(LABEL_DIR).join(format!("{id}.{ext}"));
        let full = out_dir.join(&rel);
        let stored: DepthMap<f64> = decode_depth(&bytes, unit, &full)?;
        write_file(&full, &bytes)?;

        let ctx = SampleContext { intrinsics: Some(&src.intrinsics), image: src.image.as_ref() };
        let mut sparse = Vec::with_capacity(cfg.sparse_per_label);
        for m in 0..cfg.sparse_per_label {
            let spec = cfg.sampler_for(m).resolve(&mut seeded_rng(sparse_param_seed(seed, m)));
            let points_seed = sparse_seed(seed, m);
            let s = sample(&stored, &spec, ctx, &mut seeded_rng(points_seed))?;
            let sid = sparse_id(entry_index, n, m);
            let srel = PathBuf::from(SPARSE_DIR).join(format!("{sid}.{ext}"));
            write_file(&out_dir.join(&srel), &encode_depth(&s.to_depth_map(), format, unit)?)?;
            sparse.push(SparseRecord {
                schema_version: INDEX_SCHEMA_VERSION,
                id: sid,
                label_id: id.clone(),
                path: srel,
                format,
                unit,
                sampler: spec,
                seed: points_seed,
                count: s.len(),
            });
        }

        triplets.push(TripletRecord {
            label: LabelRecord {
                schema_version: INDEX_SCHEMA_VERSION,
                id,
                entry_index,
                entry_id: src.image_id.clone(),
                draw: n,
                path: rel,
                format,
                unit,
                valid_count: stored.valid_count(),
                provenance,
            },
            sparse,
        });
    }
    Ok(EntryOutput { triplets, warnings })
}

pub(crate) fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w);
    }
    b.build().map_err(|e| PipelineError::Config(format!("cannot start worker pool: {e}")))
}

/// Synthesizes `N` labels and `N·M` sparse maps per manifest entry into `out_dir`.
///
/// Outputs depend only on the manifest, the config and its seed; the worker
/// count changes nothing but speed. Entries that fail are listed in the
/// summary and left out of the index.
pub fn run_synthesize(manifest_path: &Path, cfg: &PipelineConfig, out_dir: &Path) -> Result<SynthesisSummary> {
    let start = Instant::now();
    cfg.validate()?;
    let manifest = read_manifest(manifest_path)?;
    for dir in [out_dir.to_path_buf(), out_dir.join(LABEL_DIR), out_dir.join(SPARSE_DIR)] {
        std::fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
    }

    let total = manifest.entries.len();
    let done = AtomicUsize::new(0);
    let step = (total / 20).max(1);
    let pool = thread_pool(cfg.workers)?;
    let results: Vec<_> = pool.install(|| {
        manifest
            .entries
            .par_iter()
            .enumerate()
            .map(|(i, entry)| {
                let r = process_entry(&manifest, cfg, out_dir, i, entry);
                let k = done.fetch_add(1, Ordering::Relaxed) + 1;
                if k % step == 0 || k == total {
                    log::info!("synthesized {k}/{total} entries");
                }
                r
            })
            .collect()
    });

    let mut triplets = Vec::new();
    let mut warnings = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(out) => {
                triplets.extend(out.triplets);
                warnings.extend(out.warnings);
            }
            Err(e) => {
                let entry_id = manifest.entries[i].image_id();
                log::warn!("entry {i} ({entry_id}) skipped: {e}");
                failures.push(EntryFailure { entry_index: i, entry_id, code: e.code(), message: e.to_string() });
            }
        }
    }

    let manifest_abs = std::fs::canonicalize(manifest_path).map_err(|e| PipelineError::io(manifest_path, e))?;
    let header = IndexHeader {
        schema_version: INDEX_SCHEMA_VERSION,
        manifest: manifest_abs,
        global_seed: cfg.global_seed,
        config: cfg.recorded(),
    };
    let index_path = write_triplets(out_dir, &header, &triplets)?;

    let labels = triplets.len();
    let sparse_maps = triplets.iter().map(|t| t.sparse.len()).sum();
    let elapsed_secs = start.elapsed().as_secs_f64();
    Ok(SynthesisSummary {
        index_path,
        entries: total,
        entries_ok: total - failures.len(),
        labels,
        sparse_maps,
        warnings,
        failures,
        elapsed_secs,
        images_per_sec: total as f64 / elapsed_secs.max(f64::MIN_POSITIVE),
    })
}
