use crate::error::{Error, Result};
use crate::grid::DepthMap;
use crate::rng::{log_uniform, SeededRng};
use crate::scalar::Scalar;

use super::{shuffle_prefix, valid_indices, SparseDepth, MIN_POINTS};

/// Range of ρ drawn when a uniform sampler has no fixed fraction.
pub const TRAINING_RHO_RANGE: [f64; 2] = [1e-4, 1.0];

/// `max(2, round(ρ·η))`, capped at η.
pub fn uniform_count(rho: f64, valid: usize) -> usize {
    let n = (rho * valid as f64).round() as usize;
    n.max(MIN_POINTS).min(valid)
}

pub fn draw_training_rho(rng: &mut SeededRng) -> f64 {
    log_uniform(rng, TRAINING_RHO_RANGE[0], TRAINING_RHO_RANGE[1])
}

/// Samples exactly [`uniform_count`] distinct valid pixels, uniformly without replacement.
///
/// The pick is a prefix of a seeded permutation of the valid pixels, so for a
/// fixed seed a smaller ρ always yields a subset of a larger one.
pub fn sample_uniform<T: Scalar>(dense: &DepthMap<T>, rho: f64, rng: &mut SeededRng) -> Result<SparseDepth<T>> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Config(format!("uniform rho {rho} outside (0, 1]")));
    }
    let mut valid = valid_indices(dense)?;
    let count = uniform_count(rho, valid.len());
    shuffle_prefix(&mut valid, count, rng);
    valid.truncate(count);
    SparseDepth::gather(dense, valid)
}
