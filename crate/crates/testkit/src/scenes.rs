//! Deterministic synthetic scenes: a tilted ground plane with boxes and a
//! sphere, a textured grayscale image, and two imperfect "model predictions"
//! whose global scale is off by a random factor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct Scene {
    pub w: usize,
    pub h: usize,
    /// fx, fy, cx, cy
    pub intrinsics: [f64; 4],
    /// Ground-truth depth in meters; 0 marks holes.
    pub depth: Vec<f64>,
    /// Grayscale intensities in [0, 1].
    pub image: Vec<f64>,
    /// (model id, metric prediction in meters, dense)
    pub predictions: Vec<(String, Vec<f64>)>,
}

pub const MODEL_IDS: [&str; 2] = ["model_a", "model_b"];

/// Builds scene `index` of a dataset seeded with `seed`.
///
/// Scenes differ in base distance (1.5 to 9 m), layout and texture. About 2%
/// of ground-truth pixels are holes. Predictions are dense and equal the
/// ground truth times a per-model scale in [0.6, 1.6] with a smooth shape
/// perturbation.
pub fn scene(seed: u64, index: u64, w: usize, h: usize) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index);
    let f = 0.9 * w as f64;
    let intrinsics = [f, f, w as f64 / 2.0, h as f64 / 2.0];
    let base: f64 = rng.random_range(1.5..9.0);
    let tilt: f64 = rng.random_range(0.2..1.2);
    let boxes: Vec<(f64, f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            let x0 = rng.random_range(0.0..0.8);
            let y0 = rng.random_range(0.0..0.7);
            let bw = rng.random_range(0.1..0.3);
            let bh = rng.random_range(0.1..0.3);
            let d = rng.random_range(0.4..0.9);
            (x0, y0, bw, bh, d)
        })
        .collect();
    let sphere = (rng.random_range(0.2..0.8), rng.random_range(0.2..0.8), rng.random_range(0.08..0.2));
    let texture_period = rng.random_range(4..12) as usize;

    let mut depth = vec![0.0; w * h];
    let mut image = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let (u, v) = (x as f64 / w as f64, y as f64 / h as f64);
            // farther towards the top of the frame
            let mut d = base * (1.0 + tilt * (1.0 - v));
            let mut shade = 0.3 + 0.2 * u;
            for &(x0, y0, bw, bh, k) in &boxes {
                if u >= x0 && u < x0 + bw && v >= y0 && v < y0 + bh {
                    d = d.min(base * k * (1.0 + 0.1 * (u - x0)));
                    shade = 0.8 - 0.3 * k;
                }
            }
            let (sx, sy, sr) = sphere;
            let r2 = (u - sx).powi(2) + (v - sy).powi(2);
            if r2 < sr * sr {
                let bulge = (sr * sr - r2).sqrt();
                d = d.min(base * (0.6 - bulge));
                shade = 0.95 - bulge;
            }
            let checker = ((x / texture_period + y / texture_period) % 2) as f64;
            depth[y * w + x] = d.max(0.2);
            image[y * w + x] = (0.6 * shade + 0.4 * checker).clamp(0.0, 1.0);
        }
    }
    for _ in 0..(w * h / 50) {
        depth[rng.random_range(0..w * h)] = 0.0;
    }

    let predictions = MODEL_IDS
        .iter()
        .enumerate()
        .map(|(m, id)| {
            let scale: f64 = rng.random_range(0.6..1.6);
            let phase: f64 = rng.random_range(0.0..6.28);
            let pred = (0..w * h)
                .map(|i| {
                    let (x, y) = ((i % w) as f64, (i / w) as f64);
                    let gt = if depth[i] > 0.0 { depth[i] } else { base * (1.0 + tilt * 0.5) };
                    let wobble = 1.0 + 0.04 * (x / w as f64 * 6.0 + phase + m as f64).sin() * (y / h as f64 * 3.0).cos();
                    gt * scale * wobble
                })
                .collect();
            ((*id).to_owned(), pred)
        })
        .collect();

    Scene { w, h, intrinsics, depth, image, predictions }
}

/// A random masked map with values in `[lo, hi)` and roughly `hole_rate` holes.
pub fn random_map(rng: &mut impl Rng, w: usize, h: usize, lo: f64, hi: f64, hole_rate: f64) -> (Vec<f64>, Vec<bool>) {
    let v: Vec<f64> = (0..w * h).map(|_| rng.random_range(lo..hi)).collect();
    let ok: Vec<bool> = (0..w * h).map(|_| !rng.random_bool(hole_rate)).collect();
    (v, ok)
}
