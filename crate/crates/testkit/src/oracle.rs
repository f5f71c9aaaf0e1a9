//! Scalar reference evaluators.

/// A plain masked map.
#[derive(Clone, Debug)]
pub struct Map {
    pub w: usize,
    pub h: usize,
    pub v: Vec<f64>,
    pub ok: Vec<bool>,
}

impl Map {
    pub fn dense(w: usize, h: usize, v: Vec<f64>) -> Self {
        assert_eq!(v.len(), w * h);
        Self { w, h, ok: vec![true; v.len()], v }
    }
}

/// Mean-deviation standardization over pixels where `mask` holds.
pub fn standardize(v: &[f64], mask: &[bool]) -> Vec<f64> {
    let mut n = 0.0;
    let mut sum = 0.0;
    for i in 0..v.len() {
        if mask[i] {
            sum += v[i];
            n += 1.0;
        }
    }
    let mu = sum / n;
    let mut dev = 0.0;
    for i in 0..v.len() {
        if mask[i] {
            dev += (v[i] - mu).abs();
        }
    }
    let mad = dev / n;
    let s = if mad > 1e-6 { mad } else { 1e-6 };
    (0..v.len()).map(|i| if mask[i] { (v[i] - mu) / s } else { 0.0 }).collect()
}

/// Brute-force evaluation of the three-term loss.
///
/// Returns `(standardized_l1, absolute_l1, gradient_term)`. The gradient term
/// normalizes each pyramid level by its own count of Sobel outputs whose 3x3
/// window is fully valid, or by the full-resolution count when
/// `per_level == false`. Levels narrower than 3 pixels are skipped.
pub fn g2_loss(pred: &Map, label: &Map, per_level: bool) -> (f64, f64, f64) {
    let (w, h) = (pred.w, pred.h);
    let mask: Vec<bool> = (0..w * h).map(|i| pred.ok[i] && label.ok[i]).collect();
    let eta = mask.iter().filter(|m| **m).count() as f64;
    let tp = standardize(&pred.v, &mask);
    let tl = standardize(&label.v, &mask);

    let mut t1 = 0.0;
    let mut t2 = 0.0;
    for i in 0..w * h {
        if mask[i] {
            t1 += (tp[i] - tl[i]).abs();
            t2 += (pred.v[i] - label.v[i]).abs();
        }
    }
    t1 /= eta;
    t2 /= eta;

    let diff: Vec<f64> = (0..w * h).map(|i| tp[i] - tl[i]).collect();
    let mut t3 = 0.0;
    for r in 0..4u32 {
        let step = 2usize.pow(r);
        let lw = (w + step - 1) / step;
        let lh = (h + step - 1) / step;
        if lw < 3 || lh < 3 {
            continue;
        }
        // nearest neighbour: level pixel (x, y) takes full-res pixel (x·2^r, y·2^r)
        let sample = |x: usize, y: usize| {
            let i = (y * step) * w + x * step;
            (diff[i], mask[i])
        };
        let kx = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
        let ky = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
        let mut sum = 0.0;
        let mut count = 0.0;
        for y in 0..lh {
            for x in 0..lw {
                let mut gx = 0.0;
                let mut gy = 0.0;
                let mut all_valid = true;
                for j in 0..3 {
                    for i in 0..3 {
                        let xx = (x as i64 + i as i64 - 1).max(0).min(lw as i64 - 1) as usize;
                        let yy = (y as i64 + j as i64 - 1).max(0).min(lh as i64 - 1) as usize;
                        let (v, ok) = sample(xx, yy);
                        all_valid &= ok;
                        gx += kx[j][i] * v;
                        gy += ky[j][i] * v;
                    }
                }
                if all_valid {
                    sum += gx.abs() + gy.abs();
                    count += 1.0;
                }
            }
        }
        if per_level {
            if count > 0.0 {
                t3 += sum / count;
            }
        } else {
            t3 += sum / eta;
        }
    }
    (t1, t2, 0.5 * t3)
}

/// Determinant of the 2x2 sample covariance (n − 1 denominator) of `(a, b)` pairs.
pub fn covariance_det(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len();
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    let mut sab = 0.0;
    for &(a, b) in pairs {
        saa += (a - ma) * (a - ma);
        sbb += (b - mb) * (b - mb);
        sab += (a - ma) * (b - mb);
    }
    let d = nf - 1.0;
    (saa / d) * (sbb / d) - (sab / d) * (sab / d)
}

/// Population mean and standard deviation of the valid values.
pub fn mean_std(v: &[f64], mask: &[bool]) -> (f64, f64) {
    let vals: Vec<f64> = v.iter().zip(mask).filter(|(_, m)| **m).map(|(x, _)| *x).collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
