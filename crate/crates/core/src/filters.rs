//! Small image filters shared by the loss and the corner scorer. Borders replicate.

use crate::error::{Error, Result};
use crate::grid::MaskedGrid;
use crate::scalar::Scalar;

#[inline]
fn clamp_offset(i: usize, d: isize, n: usize) -> usize {
    (i as isize + d).clamp(0, n as isize - 1) as usize
}

/// Signed Sobel responses `(Gx, Gy)` of a dense row-major buffer.
///
/// Kernels are applied as correlations:
/// `Gx = [[-1,0,1],[-2,0,2],[-1,0,1]]`, `Gy = Gxᵀ`.
pub(crate) fn sobel_xy(values: &[f64], width: usize, height: usize) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; values.len()];
    let mut gy = vec![0.0; values.len()];
    for y in 0..height {
        let (ym, yp) = (clamp_offset(y, -1, height), clamp_offset(y, 1, height));
        for x in 0..width {
            let (xm, xp) = (clamp_offset(x, -1, width), clamp_offset(x, 1, width));
            let p = |xx: usize, yy: usize| values[yy * width + xx];
            gx[y * width + x] = (p(xp, ym) + 2.0 * p(xp, y) + p(xp, yp)) - (p(xm, ym) + 2.0 * p(xm, y) + p(xm, yp));
            gy[y * width + x] = (p(xm, yp) + 2.0 * p(x, yp) + p(xp, yp)) - (p(xm, ym) + 2.0 * p(x, ym) + p(xp, ym));
        }
    }
    (gx, gy)
}

/// `|Gx ∗ m| + |Gy ∗ m|` with 3x3 Sobel kernels and replicate padding.
///
/// An output pixel is valid only when every pixel in its (clamped) 3x3 window is valid.
pub fn sobel_abs<T: Scalar>(grid: &MaskedGrid<T>) -> Result<MaskedGrid<T>> {
    let (width, height) = (grid.width(), grid.height());
    if width < 3 || height < 3 {
        return Err(Error::Shape(format!("Sobel needs at least 3x3, got {width}x{height}")));
    }
    let values: Vec<f64> = grid.values().iter().map(|v| v.as_f64()).collect();
    let (gx, gy) = sobel_xy(&values, width, height);
    let mask = grid.mask();
    let mut out_valid = vec![false; values.len()];
    for y in 0..height {
        for x in 0..width {
            out_valid[y * width + x] = (-1..=1).all(|dy| {
                let yy = clamp_offset(y, dy, height);
                (-1..=1).all(|dx| mask[yy * width + clamp_offset(x, dx, width)])
            });
        }
    }
    let out = gx.iter().zip(&gy).map(|(a, b)| T::lit(a.abs() + b.abs())).collect();
    MaskedGrid::new(width, height, out, out_valid)
}

/// Nearest-neighbour downsample to `⌈h/2^r⌉ × ⌈w/2^r⌉`, sampling the top-left pixel of each block.
/// The mask is sampled the same way.
pub fn pyramid_nn<T: Scalar>(grid: &MaskedGrid<T>, level: u32) -> MaskedGrid<T> {
    if level == 0 {
        return grid.clone();
    }
    let stride = 1usize << level;
    let (w, h) = (grid.width().div_ceil(stride), grid.height().div_ceil(stride));
    let mut values = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let i = y * stride * grid.width() + x * stride;
            values.push(grid.values()[i]);
            valid.push(grid.mask()[i]);
        }
    }
    MaskedGrid::new(w, h, values, valid).expect("shape computed above")
}

/// Separable Gaussian blur with radius `⌈3σ⌉`.
pub(crate) fn gaussian_blur(values: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let norm: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= norm);

    let mut tmp = vec![0.0; values.len()];
    for y in 0..height {
        for x in 0..width {
            tmp[y * width + x] = kernel
                .iter()
                .zip(-radius..=radius)
                .map(|(k, d)| k * values[y * width + clamp_offset(x, d, width)])
                .sum();
        }
    }
    let mut out = vec![0.0; values.len()];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = kernel
                .iter()
                .zip(-radius..=radius)
                .map(|(k, d)| k * tmp[clamp_offset(y, d, height) * width + x])
                .sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> MaskedGrid<f64> {
        let v = (0..w * h).map(|i| f(i % w, i / w)).collect();
        MaskedGrid::dense(w, h, v).unwrap()
    }

    #[test]
    fn sobel_constant_is_zero() {
        let s = sobel_abs(&dense(4, 5, |_, _| 3.25)).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sobel_horizontal_ramp() {
        let s = sobel_abs(&dense(5, 4, |x, _| x as f64)).unwrap();
        for y in 0..4 {
            for x in 1..4 {
                assert_eq!(s.at(x, y), Some(8.0));
            }
            // replicate padding halves the central difference at the borders
            assert_eq!(s.at(0, y), Some(4.0));
            assert_eq!(s.at(4, y), Some(4.0));
        }
        let (_, gy) = sobel_xy(&(0..20).map(|i| (i % 5) as f64).collect::<Vec<_>>(), 5, 4);
        assert!(gy.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sobel_symmetric_input() {
        let g = dense(5, 5, |x, y| ((x as f64 - 2.0).powi(2) + (y as f64 - 2.0).powi(2)).sqrt());
        let s = sobel_abs(&g).unwrap();
        for y in 0..5 {
            for x in 0..5 {
                assert_eq!(s.at(x, y), s.at(4 - x, y));
                assert_eq!(s.at(x, y), s.at(y, x));
            }
        }
    }

    #[test]
    fn sobel_invalid_window_and_size() {
        let mut valid = vec![true; 25];
        valid[12] = false;
        let g = MaskedGrid::new(5, 5, vec![1.0f64; 25], valid).unwrap();
        let s = sobel_abs(&g).unwrap();
        assert_eq!(s.valid_count(), 25 - 9);
        assert!(matches!(sobel_abs(&dense(2, 5, |_, _| 1.0)), Err(Error::Shape(_))));
    }

    #[test]
    fn pyramid_shapes_and_samples() {
        let g = dense(4, 4, |x, y| (y * 4 + x) as f64);
        assert_eq!(pyramid_nn(&g, 0), g);
        let p = pyramid_nn(&g, 1);
        assert_eq!((p.width(), p.height()), (2, 2));
        assert_eq!(p.values(), &[0.0, 2.0, 8.0, 10.0]);
        let p = pyramid_nn(&dense(5, 5, |_, _| 1.0), 2);
        assert_eq!((p.width(), p.height()), (2, 2));
        let p = pyramid_nn(&dense(7, 3, |_, _| 1.0), 3);
        assert_eq!((p.width(), p.height()), (1, 1));
    }

    #[test]
    fn blur_preserves_constants() {
        let out = gaussian_blur(&[2.0; 30], 6, 5, 1.5);
        assert!(out.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }
}
