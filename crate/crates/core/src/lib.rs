//! Synthesis of pseudo training triplets for depth completion.
//!
//! Dense pseudo labels are built by mixing ground truth with foundation-model
//! predictions and rescaling the result along camera rays; sparse inputs are
//! then sampled from those labels with uniform, LiDAR-like or corner-based
//! patterns. The loss module is a reference evaluator for the matching
//! training objective.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix `f64`, which the pipeline uses throughout.

pub mod align;
pub mod camera;
pub mod error;
mod filters;
pub mod grid;
pub mod io;
pub mod loss;
pub mod rng;
pub mod samplers;
pub mod scalar;
pub mod stats;
pub mod synthesis;

pub use align::{affine_align, Alignment, AlignmentMode};
pub use camera::{unproject, CameraIntrinsics, Point3, PointCloud};
pub use error::{Error, Result};
pub use filters::{pyramid_nn, sobel_abs};
pub use grid::{DepthMap, MaskedGrid};
pub use loss::{g2_loss, g2_loss_with, l1l2_loss, GradientNormalization, L1L2Breakdown, LossBreakdown};
pub use rng::{derive_seed, seeded_rng, SeededRng};
pub use samplers::{SamplerSpec, SparseDepth, SparsePoint};
pub use scalar::Scalar;
pub use stats::{image_stats, standardize, ImageStats, STANDARDIZE_EPS};
pub use synthesis::{
    draw_mix, draw_theta, interpolate, relocate, replay_label, synthesize_label, MixWeights, ModelPrediction,
    ModelWeight, RelocationFactor, ScaleKind, SynthesisConfig, SynthesisProvenance,
};

pub type DepthMapF64 = DepthMap<f64>;
pub type DepthMapF32 = DepthMap<f32>;
pub type MaskedGridF64 = MaskedGrid<f64>;
pub type IntrinsicsF64 = CameraIntrinsics<f64>;
pub type PointCloudF64 = PointCloud<f64>;
pub type SparseDepthF64 = SparseDepth<f64>;
pub type ModelPredictionF64 = ModelPrediction<f64>;
