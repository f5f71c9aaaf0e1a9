//! Corner-based sparse depth, the pattern a VIO front-end produces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{gaussian_blur, sobel_xy};
use crate::grid::{DepthMap, MaskedGrid};
use crate::rng::SeededRng;
use crate::scalar::Scalar;

use super::{fill_uniform, valid_indices, SparseDepth, MIN_POINTS};

fn default_nms_radius() -> usize {
    5
}
fn default_sigma() -> f64 {
    1.5
}
fn default_harris_k() -> f64 {
    0.04
}
fn default_budget() -> usize {
    1500
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureParams {
    /// Point budget K.
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// Non-maximum suppression radius in pixels.
    #[serde(default = "default_nms_radius")]
    pub nms_radius: usize,
    /// Gaussian window of the structure tensor.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_harris_k")]
    pub harris_k: f64,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            budget: default_budget(),
            nms_radius: default_nms_radius(),
            sigma: default_sigma(),
            harris_k: default_harris_k(),
        }
    }
}

impl FeatureParams {
    pub fn with_budget(budget: usize) -> Self {
        Self { budget, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget < MIN_POINTS {
            return Err(Error::Config(format!("feature budget {} below {MIN_POINTS}", self.budget)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("structure tensor sigma {} must be positive", self.sigma)));
        }
        if !self.harris_k.is_finite() {
            return Err(Error::Config("harris k must be finite".into()));
        }
        Ok(())
    }
}

/// Harris response `det(M) − k·tr(M)²` of the Gaussian-weighted structure tensor.
pub fn harris_response<T: Scalar>(image: &MaskedGrid<T>, sigma: f64, k: f64) -> Vec<f64> {
    let (w, h) = (image.width(), image.height());
    let values: Vec<f64> = image.values().iter().map(|v| v.as_f64()).collect();
    let (gx, gy) = sobel_xy(&values, w, h);
    let xx: Vec<f64> = gx.iter().map(|g| g * g).collect();
    let yy: Vec<f64> = gy.iter().map(|g| g * g).collect();
    let xy: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a * b).collect();
    let (sxx, syy, sxy) = (gaussian_blur(&xx, w, h, sigma), gaussian_blur(&yy, w, h, sigma), gaussian_blur(&xy, w, h, sigma));
    sxx.iter()
        .zip(&syy)
        .zip(&sxy)
        .map(|((a, b), c)| {
            let tr = a + b;
            a * b - c * c - k * tr * tr
        })
        .collect()
}

/// Picks up to K corners by descending Harris response with greedy
/// non-maximum suppression, then fills with uniform random valid pixels.
///
/// Only pixels with valid depth and a strictly positive response are corner
/// candidates; equal responses go to the lower pixel index. The output always
/// has exactly `min(K, η)` points.
pub fn sample_features<T: Scalar>(
    dense: &DepthMap<T>,
    image: &MaskedGrid<T>,
    params: &FeatureParams,
    rng: &mut SeededRng,
) -> Result<SparseDepth<T>> {
    params.validate()?;
    if dense.width() != image.width() || dense.height() != image.height() {
        return Err(Error::Shape(format!(
            "image is {}x{}, depth is {}x{}",
            image.width(),
            image.height(),
            dense.width(),
            dense.height()
        )));
    }
    let valid = valid_indices(dense)?;
    let target = params.budget.min(valid.len());
    let (w, h) = (dense.width(), dense.height());

    let response = harris_response(image, params.sigma, params.harris_k);
    let mut candidates: Vec<usize> = valid.iter().copied().filter(|&i| response[i] > 0.0).collect();
    candidates.sort_by(|&a, &b| response[b].total_cmp(&response[a]).then(a.cmp(&b)));

    let r = params.nms_radius as isize;
    let r2 = r * r;
    let mut taken = vec![false; w * h];
    let mut chosen = Vec::with_capacity(target);
    for i in candidates {
        if chosen.len() == target {
            break;
        }
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        let suppressed = (-r..=r).any(|dy| {
            (-r..=r).any(|dx| {
                let (xx, yy) = (x + dx, y + dy);
                dx * dx + dy * dy <= r2
                    && (0..w as isize).contains(&xx)
                    && (0..h as isize).contains(&yy)
                    && taken[yy as usize * w + xx as usize]
            })
        });
        if !suppressed {
            taken[i] = true;
            chosen.push(i);
        }
    }
    fill_uniform(&mut chosen, &valid, target, rng);
    SparseDepth::gather(dense, chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    fn checker(w: usize, h: usize, cell: usize) -> MaskedGrid<f64> {
        let v = (0..w * h).map(|i| (((i % w) / cell + (i / w) / cell) % 2) as f64).collect();
        MaskedGrid::dense(w, h, v).unwrap()
    }

    #[test]
    fn checkerboard_corners_score_highest() {
        let img = checker(40, 40, 10);
        let r = harris_response(&img, 1.5, 0.04);
        let corner = r[10 * 40 + 10].max(r[9 * 40 + 9]);
        let edge = r[20 * 40 + 5];
        let flat = r[5 * 40 + 5];
        assert!(corner > 0.0);
        assert!(edge < corner && flat < corner);
    }

    #[test]
    fn constant_image_uses_fill_path() {
        let d = DepthMap::from_values(30, 20, vec![3.0f64; 600]).unwrap();
        let img = MaskedGrid::dense(30, 20, vec![0.5f64; 600]).unwrap();
        let s = sample_features(&d, &img, &FeatureParams::with_budget(25), &mut seeded_rng(2)).unwrap();
        assert_eq!(s.len(), 25);
        let again = sample_features(&d, &img, &FeatureParams::with_budget(25), &mut seeded_rng(2)).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn nms_separates_selected_corners() {
        let d = DepthMap::from_values(60, 60, vec![1.0f64; 3600]).unwrap();
        let img = checker(60, 60, 6);
        let p = FeatureParams { budget: 30, ..Default::default() };
        let s = sample_features(&d, &img, &p, &mut seeded_rng(0)).unwrap();
        assert_eq!(s.len(), 30);
    }

    #[test]
    fn budget_capped_by_valid_count() {
        let mut values = vec![0.0f64; 100];
        for v in values.iter_mut().take(7) {
            *v = 2.0;
        }
        let d = DepthMap::from_values(10, 10, values).unwrap();
        let img = checker(10, 10, 3);
        let s = sample_features(&d, &img, &FeatureParams::with_budget(150), &mut seeded_rng(0)).unwrap();
        assert_eq!(s.len(), 7);
    }

    #[test]
    fn shape_mismatch() {
        let d = DepthMap::from_values(4, 4, vec![1.0f64; 16]).unwrap();
        let img = checker(5, 4, 2);
        assert!(matches!(
            sample_features(&d, &img, &FeatureParams::with_budget(4), &mut seeded_rng(0)),
            Err(Error::Shape(_))
        ));
    }
}
