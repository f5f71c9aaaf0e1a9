//! Pinhole intrinsics and unprojection of depth maps to camera-frame points.
//!
//! Camera frame convention: x right, y down, z forward.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DepthMap;
use crate::scalar::Scalar;

/// Pinhole projection parameters, all in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics<T> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
}

impl<T: Scalar> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T) -> Result<Self> {
        let k = Self { fx, fy, cx, cy };
        k.validate()?;
        Ok(k)
    }

    /// Checks `fx, fy > 0` and finite parameters, which makes the projection matrix invertible.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy].iter().all(|v| v.is_finite());
        if !finite || self.fx <= T::zero() || self.fy <= T::zero() {
            return Err(Error::Config(format!(
                "intrinsics need finite parameters with fx, fy > 0 (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        Ok(())
    }

    /// The 3x3 projection matrix, row-major.
    pub fn matrix(&self) -> [[T; 3]; 3] {
        let (z, o) = (T::zero(), T::one());
        [[self.fx, z, self.cx], [z, self.fy, self.cy], [z, z, o]]
    }

    /// Ray through pixel `(u, v)` at unit depth: `P⁻¹ · (u, v, 1)ᵀ`.
    #[inline]
    pub fn ray(&self, u: T, v: T) -> [T; 3] {
        [(u - self.cx) / self.fx, (v - self.cy) / self.fy, T::one()]
    }

    pub fn cast<U: Scalar>(&self) -> CameraIntrinsics<U> {
        let c = |v: T| U::lit(v.as_f64());
        CameraIntrinsics { fx: c(self.fx), fy: c(self.fy), cx: c(self.cx), cy: c(self.cy) }
    }
}

/// A camera-frame point tagged with the row-major index of its source pixel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
    pub pixel: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud<T> {
    pub points: Vec<Point3<T>>,
}

impl<T> PointCloud<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Lifts every valid pixel to `d · P⁻¹ · (u, v, 1)ᵀ`, in row-major pixel order.
///
/// `u` is the column and `v` the row. The z component equals the stored depth exactly.
pub fn unproject<T: Scalar>(depth: &DepthMap<T>, k: &CameraIntrinsics<T>) -> Result<PointCloud<T>> {
    k.validate()?;
    let width = depth.width();
    let points: Vec<_> = depth
        .iter_valid()
        .map(|(i, d)| {
            let u = T::lit((i % width) as f64);
            let v = T::lit((i / width) as f64);
            let [rx, ry, _] = k.ray(u, v);
            Point3 { x: d * rx, y: d * ry, z: d, pixel: i }
        })
        .collect();
    if points.is_empty() {
        return Err(Error::EmptyDepth);
    }
    Ok(PointCloud { points })
}
