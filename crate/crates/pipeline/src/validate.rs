//! The `validate` command: re-checks every record of a triplet index.

use std::path::Path;

use depthsynth_core::io::{decode_depth, encode_depth, read_index, read_manifest, LabelRecord, Manifest, SparseRecord, TripletIndex};
use depthsynth_core::samplers::{sample, uniform_count, SampleContext};
use depthsynth_core::{derive_seed, replay_label, seeded_rng, DepthMap, SamplerSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::sources::{load_entry, EntrySources};
use crate::synthesize::thread_pool;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    MissingFile,
    Unreadable,
    ShapeMismatch,
    ValidCount,
    /// A label pixel is valid where a contributing source is not.
    MaskIllegal,
    /// A sparse value differs from its label at the same pixel.
    PositionMismatch,
    CountContract,
    ReplayMismatch,
    SourceUnavailable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub record_id: String,
    pub kind: ViolationKind,
    pub message: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub labels_checked: usize,
    pub sparse_checked: usize,
    /// Labels whose provenance was replayed (with their sparse maps).
    pub replayed: usize,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ValidateOptions {
    /// Fraction of labels to replay from provenance, chosen by a hash of the label id.
    pub replay_fraction: f64,
    pub workers: Option<usize>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { replay_fraction: 0.1, workers: None }
    }
}

fn selected_for_replay(id: &str, fraction: f64) -> bool {
    fraction >= 1.0 || (derive_seed(0, id, 0) as f64 / 2f64.powi(64)) < fraction
}

#[derive(Default)]
struct TripletCheck {
    sparse_checked: usize,
    replayed: bool,
    violations: Vec<Violation>,
}

impl TripletCheck {
    fn flag(&mut self, record_id: &str, kind: ViolationKind, message: impl Into<String>) {
        self.violations.push(Violation { record_id: record_id.to_owned(), kind, message: message.into() });
    }
}

/// Reads a record's file; flags missing or undecodable files.
fn load(
    index: &TripletIndex,
    id: &str,
    path: &Path,
    unit: depthsynth_core::io::DepthUnit,
    check: &mut TripletCheck,
) -> Option<(Vec<u8>, DepthMap<f64>)> {
    let full = index.resolve(path);
    let bytes = match std::fs::read(&full) {
        Ok(b) => b,
        Err(e) => {
            check.flag(id, ViolationKind::MissingFile, format!("{}: {e}", full.display()));
            return None;
        }
    };
    match decode_depth(&bytes, unit, &full) {
        Ok(d) => Some((bytes, d)),
        Err(e) => {
            check.flag(id, ViolationKind::Unreadable, e.to_string());
            None
        }
    }
}

fn check_label_mask(label: &LabelRecord, map: &DepthMap<f64>, src: &EntrySources, check: &mut TripletCheck) {
    let w = &label.provenance.weights;
    let mut sources: Vec<(&str, &DepthMap<f64>)> = w
        .lambdas
        .iter()
        .filter(|l| l.lambda > 0.0)
        .filter_map(|l| src.predictions.iter().find(|p| p.model_id == l.model_id).map(|p| (l.model_id.as_str(), &p.depth)))
        .collect();
    if let Some(g) = src.gt.as_ref().filter(|_| w.gt_weight > 0.0) {
        sources.push(("gt", g));
    }
    for (name, s) in sources {
        if !s.same_shape(map) {
            check.flag(&label.id, ViolationKind::ShapeMismatch, format!("{name} is {}x{}", s.width(), s.height()));
            continue;
        }
        let bad = map.iter_valid().filter(|(i, _)| !s.is_valid(*i)).count();
        if bad > 0 {
            check.flag(&label.id, ViolationKind::MaskIllegal, format!("{bad} pixels valid in the label but not in {name}"));
        }
    }
}

fn check_sparse(
    rec: &SparseRecord,
    sparse: &DepthMap<f64>,
    label: &DepthMap<f64>,
    check: &mut TripletCheck,
) {
    if !sparse.same_shape(label) {
        check.flag(&rec.id, ViolationKind::ShapeMismatch, "sparse map and label differ in shape");
        return;
    }
    let mismatched: Vec<usize> = sparse
        .iter_valid()
        .filter(|&(i, v)| label.get(i).map(f64::to_bits) != Some(v.to_bits()))
        .map(|(i, _)| i)
        .collect();
    if !mismatched.is_empty() {
        check.flag(
            &rec.id,
            ViolationKind::PositionMismatch,
            format!("{} points differ from the label, first at pixel {}", mismatched.len(), mismatched[0]),
        );
    }

    let n = sparse.valid_count();
    let eta = label.valid_count();
    if n != rec.count {
        check.flag(&rec.id, ViolationKind::CountContract, format!("record says {} points, file has {n}", rec.count));
    }
    let expected = match &rec.sampler {
        SamplerSpec::Uniform { rho: Some(rho) } => Some(uniform_count(*rho, eta)),
        SamplerSpec::Uniform { rho: None } => {
            check.flag(&rec.id, ViolationKind::CountContract, "uniform sampler recorded without a resolved rho");
            None
        }
        SamplerSpec::Features(p) => Some(p.budget.min(eta)),
        SamplerSpec::Lidar(_) => None,
    };
    match expected {
        Some(e) if e != n => {
            check.flag(&rec.id, ViolationKind::CountContract, format!("{} sampler must emit {e} points, found {n}", rec.sampler.name()))
        }
        None if n < 2 || n > eta => {
            check.flag(&rec.id, ViolationKind::CountContract, format!("{n} points outside [2, {eta}]"))
        }
        _ => {}
    }
}

fn check_triplet(index: &TripletIndex, manifest: Option<&Manifest>, t: usize, fraction: f64) -> TripletCheck {
    let triplet = &index.triplets[t];
    let label = &triplet.label;
    let mut check = TripletCheck::default();

    let stored = load(index, &label.id, &label.path, label.unit, &mut check);
    if let Some((_, map)) = &stored {
        if map.valid_count() != label.valid_count {
            check.flag(
                &label.id,
                ViolationKind::ValidCount,
                format!("record says {} valid pixels, file has {}", label.valid_count, map.valid_count()),
            );
        }
    }

    let replay = selected_for_replay(&label.id, fraction);
    let src = manifest.map(|m| match m.entries.get(label.entry_index) {
        Some(e) => load_entry(m, e, replay && triplet.sparse.iter().any(|s| s.sampler.needs_image())),
        None => Err(depthsynth_core::Error::Manifest {
            entry: Some(label.entry_index),
            message: "index refers to an entry the manifest does not have".into(),
        }),
    });
    let src = match src {
        Some(Ok(s)) => Some(s),
        Some(Err(e)) => {
            check.flag(&label.id, ViolationKind::SourceUnavailable, e.to_string());
            None
        }
        None => None,
    };

    if let (Some((bytes, map)), Some(src)) = (&stored, &src) {
        check_label_mask(label, map, src, &mut check);
        if replay {
            check.replayed = true;
            let again = replay_label(src.gt.as_ref(), &src.predictions, &label.provenance)
                .and_then(|d| encode_depth(&d, label.format, label.unit));
            match again {
                Ok(b) if &b == bytes => {}
                Ok(_) => check.flag(&label.id, ViolationKind::ReplayMismatch, "replayed label differs from the file"),
                Err(e) => check.flag(&label.id, ViolationKind::ReplayMismatch, format!("replay failed: {e}")),
            }
        }
    }

    for rec in &triplet.sparse {
        check.sparse_checked += 1;
        let Some((bytes, sparse)) = load(index, &rec.id, &rec.path, rec.unit, &mut check) else { continue };
        let Some((_, map)) = &stored else { continue };
        check_sparse(rec, &sparse, map, &mut check);
        if let (true, Some(src)) = (replay, &src) {
            let ctx = SampleContext { intrinsics: Some(&src.intrinsics), image: src.image.as_ref() };
            let again = sample(map, &rec.sampler, ctx, &mut seeded_rng(rec.seed))
                .and_then(|s| encode_depth(&s.to_depth_map(), rec.format, rec.unit));
            match again {
                Ok(b) if b == bytes => {}
                Ok(_) => check.flag(&rec.id, ViolationKind::ReplayMismatch, "resampled points differ from the file"),
                Err(e) => check.flag(&rec.id, ViolationKind::ReplayMismatch, format!("resampling failed: {e}")),
            }
        }
    }
    check
}

/// Checks files, masks, counts and position consistency of every record, and
/// replays a subset of labels from their provenance.
pub fn run_validate(index_path: &Path, opts: ValidateOptions) -> Result<ValidationReport> {
    let index = read_index(index_path)?;
    let mut report = ValidationReport::default();
    let manifest = match read_manifest(&index.header.manifest) {
        Ok(m) => Some(m),
        Err(e) => {
            report.warnings.push(format!("source checks and replay skipped: {e}"));
            None
        }
    };

    let pool = thread_pool(opts.workers)?;
    let checks: Vec<TripletCheck> = pool.install(|| {
        (0..index.triplets.len())
            .into_par_iter()
            .map(|t| check_triplet(&index, manifest.as_ref(), t, opts.replay_fraction))
            .collect()
    });
    report.labels_checked = checks.len();
    for c in checks {
        report.sparse_checked += c.sparse_checked;
        report.replayed += usize::from(c.replayed);
        report.violations.extend(c.violations);
    }
    Ok(report)
}
