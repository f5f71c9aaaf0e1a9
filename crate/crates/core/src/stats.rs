//! Moments over valid pixels and mean-deviation standardization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DepthMap, MaskedGrid};
use crate::scalar::Scalar;

/// Guard on the mean absolute deviation used by [`standardize`], in meters.
pub const STANDARDIZE_EPS: f64 = 1e-6;

/// Per-image moments over valid pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    /// Mean absolute deviation about the mean.
    pub mad: f64,
    pub valid_count: usize,
}

pub(crate) fn mean_and_mad<T: Scalar>(values: impl Iterator<Item = T> + Clone) -> Option<(T, T)> {
    let (sum, n) = values.clone().fold((T::zero(), 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        return None;
    }
    let n = T::lit(n as f64);
    let mean = sum / n;
    let mad = values.map(|v| (v - mean).abs()).sum::<T>() / n;
    Some((mean, mad))
}

/// Mean, standard deviation and mean absolute deviation over valid pixels.
pub fn image_stats<T: Scalar>(depth: &DepthMap<T>) -> Result<ImageStats> {
    let values = depth.iter_valid().map(|(_, v)| v.as_f64());
    let (mean, mad) = mean_and_mad(values.clone()).ok_or(Error::EmptyDepth)?;
    let n = depth.valid_count();
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    Ok(ImageStats { mean, std: var.sqrt(), mad, valid_count: n })
}

/// `T(d) = (d − μ) / max(MAD, ε)` over valid pixels; invalid pixels stay invalid.
///
/// Works on any masked grid so that callers can standardize over a restricted mask.
pub fn standardize_grid<T: Scalar>(grid: &MaskedGrid<T>) -> Result<MaskedGrid<T>> {
    let (mean, mad) = mean_and_mad(grid.iter_valid().map(|(_, v)| v)).ok_or(Error::EmptyDepth)?;
    let scale = mad.max(T::lit(STANDARDIZE_EPS));
    let values = grid
        .values()
        .iter()
        .zip(grid.mask())
        .map(|(&v, &ok)| if ok { (v - mean) / scale } else { T::zero() })
        .collect();
    MaskedGrid::new(grid.width(), grid.height(), values, grid.mask().to_vec())
}

/// Mean-deviation standardization of a depth map. Invariant to `a·d + b` for `a > 0`.
pub fn standardize<T: Scalar>(depth: &DepthMap<T>) -> Result<MaskedGrid<T>> {
    standardize_grid(depth.as_grid())
}
