//! Bringing a prediction onto the scale of a reference map before mixing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DepthMap;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentMode {
    /// Leave the source untouched.
    None,
    /// Multiply by `median(ref) / median(src)` over the common mask.
    MedianScale,
    /// Least-squares scale and shift over the common mask.
    #[default]
    AffineLsq,
}

/// Output of [`affine_align`] together with the transform that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Alignment<T> {
    pub map: DepthMap<T>,
    /// Mode that was actually applied; differs from the request on fallback.
    pub applied: AlignmentMode,
    /// `affine_lsq` met a zero-variance source and fell back to `median_scale`.
    pub fallback: bool,
    pub scale: f64,
    pub shift: f64,
}

fn common_pairs<T: Scalar>(src: &DepthMap<T>, reference: &DepthMap<T>) -> Result<Vec<(f64, f64)>> {
    if !src.same_shape(reference) {
        return Err(Error::Shape(format!(
            "cannot align {}x{} onto {}x{}",
            src.width(),
            src.height(),
            reference.width(),
            reference.height()
        )));
    }
    let pairs: Vec<_> = src
        .values()
        .iter()
        .zip(reference.values())
        .enumerate()
        .filter(|(i, _)| src.is_valid(*i) && reference.is_valid(*i))
        .map(|(_, (s, r))| (s.as_f64(), r.as_f64()))
        .collect();
    if pairs.len() < 2 {
        return Err(Error::InsufficientOverlap { common: pairs.len() });
    }
    Ok(pairs)
}

fn median(mut xs: Vec<f64>) -> f64 {
    let n = xs.len();
    let mid = n / 2;
    let (lower, m, _) = xs.select_nth_unstable_by(mid, f64::total_cmp);
    let hi = *m;
    if n % 2 == 1 {
        hi
    } else {
        let lo = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

fn apply<T: Scalar>(src: &DepthMap<T>, scale: f64, shift: f64) -> DepthMap<T> {
    let (a, b) = (T::lit(scale), T::lit(shift));
    // map_valid marks non-positive results invalid.
    src.map_valid(|v| a * v + b)
}

/// Aligns `src` onto `reference` over the intersection of their validity masks.
///
/// Under `affine_lsq` the output may contain non-positive values, which become
/// invalid. A source with zero variance on the common mask cannot be fit
/// affinely and falls back to `median_scale`.
pub fn affine_align<T: Scalar>(
    src: &DepthMap<T>,
    reference: &DepthMap<T>,
    mode: AlignmentMode,
) -> Result<Alignment<T>> {
    if mode == AlignmentMode::None {
        return Ok(Alignment { map: src.clone(), applied: mode, fallback: false, scale: 1.0, shift: 0.0 });
    }
    let pairs = common_pairs(src, reference)?;
    let median_fit = |pairs: &[(f64, f64)]| {
        let ms = median(pairs.iter().map(|p| p.0).collect());
        let mr = median(pairs.iter().map(|p| p.1).collect());
        mr / ms
    };

    match mode {
        AlignmentMode::None => unreachable!(),
        AlignmentMode::MedianScale => {
            let scale = median_fit(&pairs);
            Ok(Alignment { map: apply(src, scale, 0.0), applied: mode, fallback: false, scale, shift: 0.0 })
        }
        AlignmentMode::AffineLsq => {
            let n = pairs.len() as f64;
            let ms = pairs.iter().map(|p| p.0).sum::<f64>() / n;
            let mr = pairs.iter().map(|p| p.1).sum::<f64>() / n;
            let var: f64 = pairs.iter().map(|p| (p.0 - ms) * (p.0 - ms)).sum();
            let cov: f64 = pairs.iter().map(|p| (p.0 - ms) * (p.1 - mr)).sum();
            if !(var > f64::EPSILON * ms * ms * n) {
                let scale = median_fit(&pairs);
                return Ok(Alignment {
                    map: apply(src, scale, 0.0),
                    applied: AlignmentMode::MedianScale,
                    fallback: true,
                    scale,
                    shift: 0.0,
                });
            }
            let scale = cov / var;
            let shift = mr - scale * ms;
            Ok(Alignment { map: apply(src, scale, shift), applied: mode, fallback: false, scale, shift })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[f64]) -> DepthMap<f64> {
        DepthMap::from_values(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn closed_form_fit() {
        let out = affine_align(&row(&[1.0, 2.0, 3.0]), &row(&[3.0, 5.0, 7.0]), AlignmentMode::AffineLsq).unwrap();
        assert_eq!((out.scale, out.shift), (2.0, 1.0));
        assert_eq!(out.map.values(), &[3.0, 5.0, 7.0]);
    }

    #[test]
    fn exact_scale_recovered() {
        let r = row(&[1.0, 4.0, 2.5, 9.0]);
        let s = r.map_valid(|v| 2.0 * v);
        let out = affine_align(&s, &r, AlignmentMode::AffineLsq).unwrap();
        assert_eq!((out.scale, out.shift), (0.5, 0.0));
        assert_eq!(out.map, r);
    }

    #[test]
    fn identity_in_every_mode() {
        let r = row(&[1.3, 2.0, 7.1, 0.4, 5.5]);
        for mode in [AlignmentMode::None, AlignmentMode::MedianScale, AlignmentMode::AffineLsq] {
            assert_eq!(affine_align(&r, &r, mode).unwrap().map, r, "{mode:?}");
        }
    }

    #[test]
    fn median_scale_even_count() {
        let out = affine_align(&row(&[1.0, 2.0, 3.0, 4.0]), &row(&[5.0, 5.0, 5.0, 5.0]), AlignmentMode::MedianScale)
            .unwrap();
        assert_eq!(out.scale, 2.0);
        assert_eq!(out.map.values(), &[2.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn degenerate_source_falls_back() {
        let out = affine_align(&row(&[2.0, 2.0, 2.0]), &row(&[1.0, 4.0, 3.0]), AlignmentMode::AffineLsq).unwrap();
        assert!(out.fallback);
        assert_eq!(out.applied, AlignmentMode::MedianScale);
        assert_eq!(out.map.values(), &[3.0, 3.0, 3.0]);
    }

    #[test]
    fn negative_fit_marks_pixels_invalid() {
        // Fit a = -1, b = 4 on the common pixels; the extra source pixel maps to -6.
        let reference = DepthMap::from_parts(4, 1, vec![3.0, 2.0, 1.0, 1.0], vec![true, true, true, false]).unwrap();
        let out = affine_align(&row(&[1.0, 2.0, 3.0, 10.0]), &reference, AlignmentMode::AffineLsq).unwrap();
        assert_eq!((out.scale, out.shift), (-1.0, 4.0));
        assert_eq!(out.map.mask(), &[true, true, true, false]);
    }

    #[test]
    fn overlap_errors() {
        let a = DepthMap::from_values(3, 1, vec![1.0, 0.0, 0.0]).unwrap();
        let b = row(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            affine_align(&a, &b, AlignmentMode::AffineLsq),
            Err(Error::InsufficientOverlap { common: 1 })
        ));
        assert!(matches!(affine_align(&row(&[1.0, 2.0]), &b, AlignmentMode::MedianScale), Err(Error::Shape(_))));
    }
}
