//! Loading the inputs of one manifest entry.

use depthsynth_core::io::{read_depth, read_gray, Manifest, ManifestEntry};
use depthsynth_core::{CameraIntrinsics, DepthMap, Error, MaskedGrid, ModelPrediction};

pub struct EntrySources {
    pub image_id: String,
    pub gt: Option<DepthMap<f64>>,
    pub predictions: Vec<ModelPrediction<f64>>,
    pub intrinsics: CameraIntrinsics<f64>,
    pub image: Option<MaskedGrid<f64>>,
}

/// Reads ground truth, predictions and, when `with_image`, the grayscale image.
pub fn load_entry(manifest: &Manifest, entry: &ManifestEntry, with_image: bool) -> Result<EntrySources, Error> {
    let gt = match (&entry.depth_path, entry.gt_unit()?) {
        (Some(p), Some(unit)) => Some(read_depth(manifest.resolve(p), unit)?),
        _ => None,
    };
    let predictions = entry
        .predictions
        .iter()
        .map(|p| {
            Ok(ModelPrediction {
                model_id: p.model_id.clone(),
                depth: read_depth(manifest.resolve(&p.path), p.resolved_unit()?)?,
                scale_kind: p.scale_kind,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let image = if with_image {
        let img: MaskedGrid<f64> = read_gray(manifest.resolve(&entry.image_path))?;
        let shape = gt.as_ref().or(predictions.first().map(|p| &p.depth)).expect("manifest guarantees a source");
        if (img.width(), img.height()) != (shape.width(), shape.height()) {
            return Err(Error::Shape(format!(
                "image is {}x{}, depth is {}x{}",
                img.width(),
                img.height(),
                shape.width(),
                shape.height()
            )));
        }
        Some(img)
    } else {
        None
    };
    Ok(EntrySources { image_id: entry.image_id(), gt, predictions, intrinsics: entry.intrinsics, image })
}
