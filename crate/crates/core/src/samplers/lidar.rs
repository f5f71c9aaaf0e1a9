//! Spinning-LiDAR pattern: beams are elevation iso-lines in the camera frame.

use serde::{Deserialize, Serialize};

use crate::camera::{unproject, CameraIntrinsics};
use crate::error::{Error, Result};
use crate::grid::DepthMap;
use crate::rng::SeededRng;
use crate::scalar::Scalar;

use super::{fill_uniform, valid_indices, SparseDepth, MIN_POINTS};

fn default_azimuth_resolution() -> f64 {
    0.2
}

fn default_beams() -> usize {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LidarParams {
    #[serde(default = "default_beams")]
    pub beams: usize,
    /// Elevation span covered by the beams, degrees, positive up.
    /// Defaults to the 2nd..98th percentile of the scene's pixel elevations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elevation_range_deg: Option<[f64; 2]>,
    /// Width of an azimuth bin, degrees.
    #[serde(default = "default_azimuth_resolution")]
    pub azimuth_resolution_deg: f64,
}

impl Default for LidarParams {
    fn default() -> Self {
        Self { beams: default_beams(), elevation_range_deg: None, azimuth_resolution_deg: default_azimuth_resolution() }
    }
}

impl LidarParams {
    pub fn with_beams(beams: usize) -> Self {
        Self { beams, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.beams < 1 {
            return Err(Error::Config("lidar needs at least one beam".into()));
        }
        if !(self.azimuth_resolution_deg > 0.0 && self.azimuth_resolution_deg.is_finite()) {
            return Err(Error::Config(format!("azimuth resolution {} must be positive", self.azimuth_resolution_deg)));
        }
        if let Some([lo, hi]) = self.elevation_range_deg {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!("elevation range [{lo}, {hi}] is not ordered")));
            }
        }
        Ok(())
    }
}

/// Beam layout actually used for a frame, all angles in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamLayout {
    pub lowest: f64,
    pub spacing: f64,
    pub beams: usize,
}

impl BeamLayout {
    /// Elevation of beam `b`: beams sit at the centres of `beams` equal bands.
    pub fn elevation(&self, b: usize) -> f64 {
        self.lowest + (b as f64 + 0.5) * self.spacing
    }

    /// Nearest beam and the angular distance to it.
    pub fn nearest(&self, elevation: f64) -> (usize, f64) {
        let b = if self.spacing > 0.0 {
            ((elevation - self.lowest) / self.spacing - 0.5).round().clamp(0.0, (self.beams - 1) as f64) as usize
        } else {
            0
        };
        (b, (elevation - self.elevation(b)).abs())
    }

    /// Acceptance half-window around a beam.
    pub fn half_window(&self) -> f64 {
        (0.5 * self.spacing).max(1e-12)
    }
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let i = (p * (sorted.len() - 1) as f64).round() as usize;
    sorted[i]
}

/// Per-pixel `(index, elevation, azimuth)` of valid pixels, radians.
pub(crate) fn pixel_angles<T: Scalar>(dense: &DepthMap<T>, k: &CameraIntrinsics<T>) -> Result<Vec<(usize, f64, f64)>> {
    let cloud = unproject(dense, k)?;
    Ok(cloud
        .points
        .iter()
        .map(|p| {
            let (x, y, z) = (p.x.as_f64(), p.y.as_f64(), p.z.as_f64());
            let elevation = (-y).atan2((x * x + z * z).sqrt());
            let azimuth = x.atan2(z);
            (p.pixel, elevation, azimuth)
        })
        .collect())
}

/// Resolves the beam layout for a frame.
pub fn beam_layout<T: Scalar>(dense: &DepthMap<T>, k: &CameraIntrinsics<T>, params: &LidarParams) -> Result<BeamLayout> {
    params.validate()?;
    let (lo, hi) = match params.elevation_range_deg {
        Some([lo, hi]) => (lo.to_radians(), hi.to_radians()),
        None => {
            let mut el: Vec<f64> = pixel_angles(dense, k)?.into_iter().map(|a| a.1).collect();
            el.sort_by(f64::total_cmp);
            (percentile(&el, 0.02), percentile(&el, 0.98))
        }
    };
    Ok(BeamLayout { lowest: lo, spacing: (hi - lo) / params.beams as f64, beams: params.beams })
}

/// Simulates a `B`-beam LiDAR on a dense label.
///
/// Each valid pixel is assigned to its nearest beam if it lies strictly within
/// half a beam spacing of it. Within every (beam, azimuth bin) cell the pixel
/// nearest to the beam elevation is kept (ties go to the lower pixel index).
/// If fewer than two points result, uniform random valid pixels fill up to two.
pub fn sample_lidar<T: Scalar>(
    dense: &DepthMap<T>,
    k: &CameraIntrinsics<T>,
    params: &LidarParams,
    rng: &mut SeededRng,
) -> Result<SparseDepth<T>> {
    let valid = valid_indices(dense)?;
    let layout = beam_layout(dense, k, params)?;
    let angles = pixel_angles(dense, k)?;

    let bin_width = params.azimuth_resolution_deg.to_radians();
    let az_min = angles.iter().map(|a| a.2).fold(f64::INFINITY, f64::min);
    let az_max = angles.iter().map(|a| a.2).fold(f64::NEG_INFINITY, f64::max);
    let bins = ((az_max - az_min) / bin_width).floor() as usize + 1;

    let half = layout.half_window();
    let mut best: Vec<Option<(f64, usize)>> = vec![None; layout.beams * bins];
    for &(pixel, elevation, azimuth) in &angles {
        let (beam, dist) = layout.nearest(elevation);
        if dist >= half && !(layout.spacing == 0.0 && dist == 0.0) {
            continue;
        }
        let bin = (((azimuth - az_min) / bin_width).floor() as usize).min(bins - 1);
        let cell = &mut best[beam * bins + bin];
        // angles are in pixel order, so strict < keeps the lower index on ties
        if cell.is_none_or(|(d, _)| dist < d) {
            *cell = Some((dist, pixel));
        }
    }

    let mut chosen: Vec<usize> = best.into_iter().flatten().map(|(_, p)| p).collect();
    fill_uniform(&mut chosen, &valid, MIN_POINTS, rng);
    SparseDepth::gather(dense, chosen)
}
