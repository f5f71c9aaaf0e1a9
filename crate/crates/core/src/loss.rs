//! Reference evaluation of the training loss on dense labels.
//!
//! `L(p, l) = (1/η) Σ |T(p) − T(l)| + (1/η) Σ |p − l|
//!          + 0.5 Σ_{r=0..3} (1/η_r) Σ |∇ ρ_r(T(p) − T(l))|`
//!
//! `T` is mean-deviation standardization, `ρ_r` nearest-neighbour downsampling
//! by `2^r` and `∇` the absolute Sobel response in both directions. All sums
//! run over pixels valid in both maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{pyramid_nn, sobel_abs};
use crate::grid::{DepthMap, MaskedGrid};
use crate::scalar::Scalar;
use crate::stats::standardize_grid;

/// Number of pyramid levels in the gradient term (`r = 0..=3`).
pub const PYRAMID_LEVELS: u32 = 4;

/// Normalizer of each pyramid level in the gradient term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientNormalization {
    /// Each level divides by its own count of valid Sobel outputs.
    #[default]
    PerLevel,
    /// Every level divides by the full-resolution η.
    FullResolution,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub standardized_l1: f64,
    pub absolute_l1: f64,
    pub gradient_term: f64,
    pub total: f64,
    pub normalization: GradientNormalization,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1L2Breakdown {
    pub l1: f64,
    pub l2: f64,
    pub total: f64,
}

/// Both maps as f64 grids restricted to their common validity mask.
fn common<T: Scalar>(pred: &DepthMap<T>, label: &DepthMap<T>) -> Result<(MaskedGrid<f64>, MaskedGrid<f64>, usize)> {
    if !pred.same_shape(label) {
        return Err(Error::Shape(format!(
            "prediction is {}x{}, label is {}x{}",
            pred.width(),
            pred.height(),
            label.width(),
            label.height()
        )));
    }
    let mask: Vec<bool> = pred.mask().iter().zip(label.mask()).map(|(a, b)| *a && *b).collect();
    let eta = mask.iter().filter(|&&m| m).count();
    if eta < 2 {
        return Err(Error::InsufficientValid { valid: eta, required: 2 });
    }
    let lift = |d: &DepthMap<T>| {
        let v = d.values().iter().map(|x| x.as_f64()).collect();
        MaskedGrid::new(d.width(), d.height(), v, mask.clone()).expect("shape checked")
    };
    Ok((lift(pred), lift(label), eta))
}

fn mean_abs(a: &MaskedGrid<f64>, b: &MaskedGrid<f64>, eta: usize) -> f64 {
    a.iter_valid().zip(b.iter_valid()).map(|((_, x), (_, y))| (x - y).abs()).sum::<f64>() / eta as f64
}

/// Evaluates the loss with the default per-level normalization.
pub fn g2_loss<T: Scalar>(pred: &DepthMap<T>, label: &DepthMap<T>) -> Result<LossBreakdown> {
    g2_loss_with(pred, label, GradientNormalization::PerLevel)
}

pub fn g2_loss_with<T: Scalar>(
    pred: &DepthMap<T>,
    label: &DepthMap<T>,
    normalization: GradientNormalization,
) -> Result<LossBreakdown> {
    let (p, l, eta) = common(pred, label)?;
    let tp = standardize_grid(&p)?;
    let tl = standardize_grid(&l)?;

    let standardized_l1 = mean_abs(&tp, &tl, eta);
    let absolute_l1 = mean_abs(&p, &l, eta);

    let diff_values = tp.values().iter().zip(tl.values()).map(|(a, b)| a - b).collect();
    let diff = MaskedGrid::new(p.width(), p.height(), diff_values, p.mask().to_vec())?;
    let mut gradient_sum = 0.0;
    for r in 0..PYRAMID_LEVELS {
        let level = pyramid_nn(&diff, r);
        // Levels too small for a 3x3 kernel contribute nothing.
        let Ok(grad) = sobel_abs(&level) else { continue };
        let (sum, n) = grad.iter_valid().fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
        gradient_sum += match normalization {
            GradientNormalization::PerLevel if n > 0 => sum / n as f64,
            GradientNormalization::PerLevel => 0.0,
            GradientNormalization::FullResolution => sum / eta as f64,
        };
    }
    let gradient_term = 0.5 * gradient_sum;

    Ok(LossBreakdown {
        standardized_l1,
        absolute_l1,
        gradient_term,
        total: standardized_l1 + absolute_l1 + gradient_term,
        normalization,
    })
}

/// Mean absolute plus mean squared error over the common mask.
pub fn l1l2_loss<T: Scalar>(pred: &DepthMap<T>, label: &DepthMap<T>) -> Result<L1L2Breakdown> {
    let (p, l, eta) = common(pred, label)?;
    let l1 = mean_abs(&p, &l, eta);
    let l2 = p.iter_valid().zip(l.iter_valid()).map(|((_, x), (_, y))| (x - y) * (x - y)).sum::<f64>() / eta as f64;
    Ok(L1L2Breakdown { l1, l2, total: l1 + l2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(w: usize, h: usize, v: Vec<f64>) -> DepthMap<f64> {
        DepthMap::from_values(w, h, v).unwrap()
    }

    #[test]
    fn identical_maps_have_zero_loss() {
        let l = map(4, 4, (1..=16).map(|v| v as f64 * 0.3).collect());
        let b = g2_loss(&l, &l).unwrap();
        assert_eq!(b.total, 0.0);
        assert_eq!(l1l2_loss(&l, &l).unwrap().total, 0.0);
    }

    #[test]
    fn constant_shift_only_hits_absolute_term() {
        let l = map(5, 4, (0..20).map(|v| 1.0 + ((v * 7) % 11) as f64).collect());
        let p = l.map_valid(|v| v + 1.0);
        let b = g2_loss(&p, &l).unwrap();
        assert!(b.standardized_l1 < 1e-12);
        assert!(b.gradient_term < 1e-12);
        assert!((b.total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_maps_skip_the_gradient_term() {
        let p = map(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let l = map(2, 2, vec![1.0, 2.0, 3.0, 5.0]);
        let b = g2_loss(&p, &l).unwrap();
        assert_eq!(b.gradient_term, 0.0);
        assert!((b.absolute_l1 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let a = map(2, 2, vec![1.0; 4]);
        let b = map(4, 1, vec![1.0; 4]);
        assert!(matches!(g2_loss(&a, &b), Err(Error::Shape(_))));
        let sparse = map(2, 2, vec![1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(g2_loss(&a, &sparse), Err(Error::InsufficientValid { valid: 1, .. })));
    }

    #[test]
    fn l1l2_hand_values() {
        let p = map(2, 1, vec![1.0, 4.0]);
        let l = map(2, 1, vec![2.0, 2.0]);
        let b = l1l2_loss(&p, &l).unwrap();
        assert_eq!((b.l1, b.l2, b.total), (1.5, 2.5, 4.0));
    }
}
