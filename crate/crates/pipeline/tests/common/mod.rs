#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use depthsynth_core::io::{write_depth, write_manifest, DepthFormat, DepthUnit, Manifest, ManifestEntry, PredictionRef};
use depthsynth_core::{CameraIntrinsics, DepthMap, ScaleKind};
use depthsynth_testkit::scenes::{scene, MODEL_IDS};

#[derive(Clone, Debug)]
pub struct Dataset {
    pub entries: usize,
    pub w: usize,
    pub h: usize,
    pub seed: u64,
    /// Every k-th entry (k > 0) has no ground truth.
    pub unlabeled_every: Option<usize>,
    pub pred_format: DepthFormat,
    /// Write a real image per entry; otherwise all entries share one placeholder.
    pub images: bool,
}

impl Dataset {
    pub fn new(entries: usize, w: usize, h: usize) -> Self {
        Self { entries, w, h, seed: 1, unlabeled_every: None, pred_format: DepthFormat::Pfm, images: true }
    }
}

fn write_gray(path: &Path, w: usize, h: usize, v: &[f64]) {
    let raw: Vec<u8> = v.iter().map(|x| (x.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    image::GrayImage::from_raw(w as u32, h as u32, raw).unwrap().save(path).unwrap();
}

/// Writes scenes, predictions and a manifest under `dir`; returns the manifest path.
pub fn write_dataset(dir: &Path, d: &Dataset) -> PathBuf {
    for sub in ["rgb", "depth", "pred"] {
        std::fs::create_dir_all(dir.join(sub)).unwrap();
    }
    if !d.images {
        write_gray(&dir.join("rgb/placeholder.png"), d.w, d.h, &vec![0.5; d.w * d.h]);
    }
    let ext = d.pred_format.extension();
    let entries = (0..d.entries)
        .map(|i| {
            let s = scene(d.seed, i as u64, d.w, d.h);
            let image_path = if d.images {
                let p = PathBuf::from(format!("rgb/{i:05}.png"));
                write_gray(&dir.join(&p), d.w, d.h, &s.image);
                p
            } else {
                PathBuf::from("rgb/placeholder.png")
            };
            let labeled = d.unlabeled_every.is_none_or(|k| i % k != 0);
            let depth_path = labeled.then(|| {
                let p = PathBuf::from(format!("depth/{i:05}.png"));
                let gt = DepthMap::from_values(d.w, d.h, s.depth.clone()).unwrap();
                write_depth(&gt, dir.join(&p), DepthFormat::Png, DepthUnit::Mm).unwrap();
                p
            });
            let predictions = s
                .predictions
                .iter()
                .map(|(id, v)| {
                    let p = PathBuf::from(format!("pred/{i:05}_{id}.{ext}"));
                    let map = DepthMap::from_values(d.w, d.h, v.clone()).unwrap();
                    write_depth(&map, dir.join(&p), d.pred_format, DepthUnit::conventional_for(d.pred_format)).unwrap();
                    PredictionRef { model_id: id.clone(), path: p, scale_kind: ScaleKind::Metric, unit: None }
                })
                .collect();
            let [fx, fy, cx, cy] = s.intrinsics;
            ManifestEntry {
                id: Some(format!("scene_{i:05}")),
                image_path,
                depth_path,
                depth_unit: None,
                intrinsics: CameraIntrinsics::new(fx, fy, cx, cy).unwrap(),
                predictions,
            }
        })
        .collect();
    let path = dir.join("manifest.json");
    write_manifest(&Manifest::new(entries), &path).unwrap();
    path
}

pub const MODELS: [&str; 2] = MODEL_IDS;

/// Every file under `root` with its contents, keyed by relative path.
pub fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}
