//! Row-major grids with a validity mask, and the depth map built on top of them.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A row-major grid of values with a per-pixel validity mask.
///
/// Unlike [`DepthMap`], values may take any sign; this is the carrier for
/// standardized depth, Sobel responses and image intensities.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskedGrid<T> {
    width: usize,
    height: usize,
    values: Vec<T>,
    valid: Vec<bool>,
}

impl<T: Scalar> MaskedGrid<T> {
    /// Builds a grid; invalid pixels are reset to zero so they never leak into arithmetic.
    pub fn new(width: usize, height: usize, mut values: Vec<T>, valid: Vec<bool>) -> Result<Self> {
        check_len(width, height, values.len(), "values")?;
        check_len(width, height, valid.len(), "mask")?;
        for (v, &ok) in values.iter_mut().zip(&valid) {
            if !ok {
                *v = T::zero();
            }
        }
        Ok(Self { width, height, values, valid })
    }

    /// A grid where every pixel is valid.
    pub fn dense(width: usize, height: usize, values: Vec<T>) -> Result<Self> {
        let valid = vec![true; values.len()];
        Self::new(width, height, values, valid)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.valid[index]
    }

    pub fn get(&self, index: usize) -> Option<T> {
        self.valid[index].then(|| self.values[index])
    }

    pub fn at(&self, x: usize, y: usize) -> Option<T> {
        self.get(y * self.width + x)
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// `(pixel index, value)` for every valid pixel, in row-major order.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, T)> + Clone + '_ {
        self.values
            .iter()
            .zip(&self.valid)
            .enumerate()
            .filter(|(_, (_, &ok))| ok)
            .map(|(i, (&v, _))| (i, v))
    }

    pub fn same_shape<U>(&self, other: &MaskedGrid<U>) -> bool {
        self.width == other.width && self.height == other.height
    }
}

fn check_len(width: usize, height: usize, len: usize, what: &str) -> Result<()> {
    if width.checked_mul(height) != Some(len) {
        return Err(Error::Shape(format!("{what} has {len} entries, expected {width}x{height}")));
    }
    Ok(())
}

/// Dense per-pixel depth in meters with a validity mask.
///
/// Every valid pixel holds a finite value greater than zero. Ingest maps
/// non-finite and non-positive values to invalid.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap<T> {
    grid: MaskedGrid<T>,
}

impl<T: Scalar> DepthMap<T> {
    /// Builds a depth map from raw values, applying the sentinel rule.
    pub fn from_values(width: usize, height: usize, values: Vec<T>) -> Result<Self> {
        let valid = vec![true; values.len()];
        Self::from_parts(width, height, values, valid)
    }

    /// Builds a depth map from values and a mask; pixels failing the sentinel rule become invalid.
    pub fn from_parts(width: usize, height: usize, values: Vec<T>, mut valid: Vec<bool>) -> Result<Self> {
        check_len(width, height, values.len(), "values")?;
        check_len(width, height, valid.len(), "mask")?;
        for (ok, &v) in valid.iter_mut().zip(&values) {
            *ok = *ok && is_depth(v);
        }
        Ok(Self { grid: MaskedGrid::new(width, height, values, valid)? })
    }

    pub fn width(&self) -> usize {
        self.grid.width
    }

    pub fn height(&self) -> usize {
        self.grid.height
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn values(&self) -> &[T] {
        self.grid.values()
    }

    pub fn mask(&self) -> &[bool] {
        self.grid.mask()
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.grid.is_valid(index)
    }

    pub fn get(&self, index: usize) -> Option<T> {
        self.grid.get(index)
    }

    pub fn at(&self, x: usize, y: usize) -> Option<T> {
        self.grid.at(x, y)
    }

    /// η: number of valid pixels.
    pub fn valid_count(&self) -> usize {
        self.grid.valid_count()
    }

    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, T)> + Clone + '_ {
        self.grid.iter_valid()
    }

    pub fn as_grid(&self) -> &MaskedGrid<T> {
        &self.grid
    }

    pub fn same_shape<U: Scalar>(&self, other: &DepthMap<U>) -> bool {
        self.grid.same_shape(&other.grid)
    }

    /// Applies `f` to every valid value; results failing the sentinel rule become invalid.
    pub fn map_valid(&self, f: impl Fn(T) -> T) -> Self {
        let values = self
            .grid
            .values
            .iter()
            .zip(&self.grid.valid)
            .map(|(&v, &ok)| if ok { f(v) } else { T::zero() })
            .collect();
        Self::from_parts(self.width(), self.height(), values, self.grid.valid.clone())
            .expect("shape is preserved")
    }

    /// Restricts the validity mask to `keep`.
    pub fn masked(&self, keep: &[bool]) -> Result<Self> {
        if keep.len() != self.len() {
            return Err(Error::Shape(format!("mask has {} entries, map has {}", keep.len(), self.len())));
        }
        let valid = self.grid.valid.iter().zip(keep).map(|(&a, &b)| a && b).collect();
        Self::from_parts(self.width(), self.height(), self.grid.values.clone(), valid)
    }

    /// Converts to another scalar type. Values that do not survive the conversion become invalid.
    pub fn cast<U: Scalar>(&self) -> DepthMap<U> {
        let values = self
            .grid
            .values
            .iter()
            .map(|v| U::from(*v).unwrap_or_else(U::nan))
            .collect();
        DepthMap::from_parts(self.width(), self.height(), values, self.grid.valid.clone())
            .expect("shape is preserved")
    }

    pub fn into_grid(self) -> MaskedGrid<T> {
        self.grid
    }
}

#[inline]
pub(crate) fn is_depth<T: Scalar>(v: T) -> bool {
    v.is_finite() && v > T::zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentinel_rule_on_ingest() {
        let d = DepthMap::from_values(2, 2, vec![1.0, 0.0, f64::NAN, -3.0]).unwrap();
        assert_eq!(d.mask(), &[true, false, false, false]);
        assert_eq!(d.values(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(d.valid_count(), 1);
        let d = DepthMap::from_values(2, 1, vec![f64::INFINITY, 2.0]).unwrap();
        assert_eq!(d.mask(), &[false, true]);
    }

    #[test]
    fn shape_checks() {
        assert!(matches!(DepthMap::from_values(3, 2, vec![1.0f32; 5]), Err(Error::Shape(_))));
        assert!(MaskedGrid::new(2, 2, vec![1.0f64; 4], vec![true; 3]).is_err());
    }

    #[test]
    fn map_valid_reapplies_sentinel() {
        let d = DepthMap::from_values(3, 1, vec![1.0f64, 2.0, 3.0]).unwrap();
        let m = d.map_valid(|v| v - 2.0);
        assert_eq!(m.mask(), &[false, false, true]);
        assert_eq!(m.get(2), Some(1.0));
    }

    #[test]
    fn cast_roundtrip_keeps_mask() {
        let d = DepthMap::from_values(2, 1, vec![0.0f64, 1.5]).unwrap();
        let f: DepthMap<f32> = d.cast();
        assert_eq!(f.mask(), d.mask());
        assert_eq!(f.get(1), Some(1.5f32));
    }
}
