//! Sparse depth sampling from dense labels.
//!
//! Three acquisition patterns: uniform random pixels, simulated LiDAR beams,
//! and image corners as a VIO front-end would track. Every sampler copies
//! depth values verbatim from the dense label.

mod features;
mod lidar;
mod uniform;

pub use features::{harris_response, sample_features, FeatureParams};
pub use lidar::{beam_layout, sample_lidar, BeamLayout, LidarParams};
pub use uniform::{draw_training_rho, sample_uniform, uniform_count, TRAINING_RHO_RANGE};

use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::grid::{DepthMap, MaskedGrid};
use crate::rng::SeededRng;
use crate::scalar::Scalar;

/// Fewest points any sampler emits.
pub const MIN_POINTS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparsePoint<T> {
    /// Row-major pixel index.
    pub index: usize,
    pub depth: T,
}

/// Sparse metric depth on a `width × height` grid, sorted by pixel index without duplicates.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseDepth<T> {
    pub width: usize,
    pub height: usize,
    pub points: Vec<SparsePoint<T>>,
}

impl<T: Scalar> SparseDepth<T> {
    /// Picks `indices` out of `dense`. Duplicates collapse and invalid pixels are rejected.
    pub fn gather(dense: &DepthMap<T>, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        let points = indices
            .into_iter()
            .map(|index| {
                dense
                    .get(index)
                    .map(|depth| SparsePoint { index, depth })
                    .ok_or_else(|| Error::Shape(format!("pixel {index} is not valid in the dense map")))
            })
            .collect::<Result<_>>()?;
        Ok(Self { width: dense.width(), height: dense.height(), points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Rasterizes to a depth map that is invalid everywhere except at the sampled pixels.
    pub fn to_depth_map(&self) -> DepthMap<T> {
        let n = self.width * self.height;
        let mut values = vec![T::zero(); n];
        let mut valid = vec![false; n];
        for p in &self.points {
            values[p.index] = p.depth;
            valid[p.index] = true;
        }
        DepthMap::from_parts(self.width, self.height, values, valid).expect("shape is consistent")
    }

    /// Reads the valid pixels of a rasterized sparse map back into points.
    pub fn from_depth_map(map: &DepthMap<T>) -> Self {
        let points = map.iter_valid().map(|(index, depth)| SparsePoint { index, depth }).collect();
        Self { width: map.width(), height: map.height(), points }
    }
}

/// Which pattern to sample and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerSpec {
    /// Fraction ρ of valid pixels. Without `rho`, ρ is drawn log-uniform per call.
    Uniform {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho: Option<f64>,
    },
    Lidar(LidarParams),
    Features(FeatureParams),
}

impl SamplerSpec {
    pub fn uniform(rho: f64) -> Self {
        SamplerSpec::Uniform { rho: Some(rho) }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SamplerSpec::Uniform { rho: Some(rho) } if !(*rho > 0.0 && *rho <= 1.0) => {
                Err(Error::Config(format!("uniform rho {rho} outside (0, 1]")))
            }
            SamplerSpec::Uniform { .. } => Ok(()),
            SamplerSpec::Lidar(p) => p.validate(),
            SamplerSpec::Features(p) => p.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SamplerSpec::Uniform { .. } => "uniform",
            SamplerSpec::Lidar(_) => "lidar",
            SamplerSpec::Features(_) => "features",
        }
    }

    pub fn needs_image(&self) -> bool {
        matches!(self, SamplerSpec::Features(_))
    }

    /// Fixes every randomized parameter, drawing it from `rng`.
    pub fn resolve(&self, rng: &mut SeededRng) -> SamplerSpec {
        match self {
            SamplerSpec::Uniform { rho: None } => SamplerSpec::Uniform { rho: Some(draw_training_rho(rng)) },
            other => other.clone(),
        }
    }
}

/// Inputs beyond the dense label that some samplers need.
#[derive(Clone, Copy, Debug, Default)]
pub struct SampleContext<'a, T> {
    pub intrinsics: Option<&'a CameraIntrinsics<T>>,
    pub image: Option<&'a MaskedGrid<T>>,
}

/// Samples with a resolved spec (see [`SamplerSpec::resolve`]).
pub fn sample<T: Scalar>(
    dense: &DepthMap<T>,
    spec: &SamplerSpec,
    ctx: SampleContext<'_, T>,
    rng: &mut SeededRng,
) -> Result<SparseDepth<T>> {
    spec.validate()?;
    match spec {
        SamplerSpec::Uniform { rho } => {
            let rho = rho.ok_or_else(|| Error::Config("uniform sampler needs a resolved rho".into()))?;
            sample_uniform(dense, rho, rng)
        }
        SamplerSpec::Lidar(p) => {
            let k = ctx.intrinsics.ok_or_else(|| Error::Config("lidar sampler needs intrinsics".into()))?;
            sample_lidar(dense, k, p, rng)
        }
        SamplerSpec::Features(p) => {
            let image = ctx.image.ok_or_else(|| Error::Config("feature sampler needs an image".into()))?;
            sample_features(dense, image, p, rng)
        }
    }
}

/// Valid pixel indices, or `InsufficientValid` when fewer than [`MIN_POINTS`].
pub(crate) fn valid_indices<T: Scalar>(dense: &DepthMap<T>) -> Result<Vec<usize>> {
    let idx: Vec<usize> = dense.iter_valid().map(|(i, _)| i).collect();
    if idx.len() < MIN_POINTS {
        return Err(Error::InsufficientValid { valid: idx.len(), required: MIN_POINTS });
    }
    Ok(idx)
}

/// Moves `count` uniformly chosen elements to the front of `items` (partial Fisher–Yates).
///
/// The first `k` steps do not depend on `count`, so a shorter draw is a prefix of a longer one.
pub(crate) fn shuffle_prefix<U>(items: &mut [U], count: usize, rng: &mut SeededRng) {
    use rand::Rng;
    let n = items.len();
    for i in 0..count.min(n) {
        let j = rng.random_range(i..n);
        items.swap(i, j);
    }
}

/// Tops `chosen` up to `target` points with uniformly drawn unused valid pixels.
pub(crate) fn fill_uniform(chosen: &mut Vec<usize>, valid: &[usize], target: usize, rng: &mut SeededRng) {
    if chosen.len() >= target {
        return;
    }
    let mut taken = vec![false; valid.iter().copied().max().map_or(0, |m| m + 1)];
    for &i in chosen.iter() {
        if i < taken.len() {
            taken[i] = true;
        }
    }
    let mut rest: Vec<usize> = valid.iter().copied().filter(|&i| !taken[i]).collect();
    let need = (target - chosen.len()).min(rest.len());
    shuffle_prefix(&mut rest, need, rng);
    chosen.extend_from_slice(&rest[..need]);
}
