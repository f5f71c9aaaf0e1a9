use depthsynth_core::{g2_loss, g2_loss_with, l1l2_loss, DepthMap, GradientNormalization};
use depthsynth_testkit::oracle::{self, Map};
use depthsynth_testkit::scenes::random_map;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn to_depth(m: &Map) -> DepthMap<f64> {
    DepthMap::from_parts(m.w, m.h, m.v.clone(), m.ok.clone()).unwrap()
}

fn random_pair(rng: &mut ChaCha8Rng) -> (Map, Map) {
    let (w, h) = (rng.random_range(1..=8), rng.random_range(2..=8));
    let (v, ok) = random_map(rng, w, h, 0.1, 20.0, 0.1);
    let (u, ok2) = random_map(rng, w, h, 0.1, 20.0, 0.1);
    (Map { w, h, v, ok }, Map { w, h, v: u, ok: ok2 })
}

#[test]
fn matches_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let mut checked = 0;
    while checked < 200 {
        let (p, l) = random_pair(&mut rng);
        let common = p.ok.iter().zip(&l.ok).filter(|(a, b)| **a && **b).count();
        if common < 2 {
            continue;
        }
        for (norm, per_level) in [(GradientNormalization::PerLevel, true), (GradientNormalization::FullResolution, false)] {
            let got = g2_loss_with(&to_depth(&p), &to_depth(&l), norm).unwrap();
            let (t1, t2, t3) = oracle::g2_loss(&p, &l, per_level);
            assert!((got.standardized_l1 - t1).abs() <= 1e-9, "{got:?} vs {t1}");
            assert!((got.absolute_l1 - t2).abs() <= 1e-9);
            assert!((got.gradient_term - t3).abs() <= 1e-9, "{} vs {t3}", got.gradient_term);
            assert!((got.total - (t1 + t2 + t3)).abs() <= 1e-9);
        }
        checked += 1;
    }
}

#[test]
fn hand_example_matches_oracle() {
    let p = Map::dense(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
    let l = Map::dense(2, 2, vec![1.0, 2.0, 3.0, 5.0]);
    let got = g2_loss(&to_depth(&p), &to_depth(&l)).unwrap();
    let (t1, t2, t3) = oracle::g2_loss(&p, &l, true);
    assert!((got.total - (t1 + t2 + t3)).abs() <= 1e-9);
    assert_eq!(got.absolute_l1, 0.25);
}

#[test]
fn affine_collapse() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let (w, h) = (rng.random_range(2..=8), rng.random_range(2..=8));
        let (v, ok) = random_map(&mut rng, w, h, 0.5, 10.0, 0.1);
        let label = DepthMap::from_parts(w, h, v, ok).unwrap();
        if label.valid_count() < 2 {
            continue;
        }
        let a = rng.random_range(0.2..5.0);
        let b = rng.random_range(0.0..3.0);
        let pred = label.map_valid(|x| a * x + b);
        let out = g2_loss(&pred, &label).unwrap();
        assert!(out.standardized_l1 < 1e-9, "{out:?}");
        assert!(out.gradient_term < 1e-9, "{out:?}");
        let expected = label.iter_valid().map(|(_, x)| ((a - 1.0) * x + b).abs()).sum::<f64>() / label.valid_count() as f64;
        assert!((out.absolute_l1 - expected).abs() <= 1e-9);
    }
}

#[test]
fn identity_and_shift() {
    let label = DepthMap::from_values(4, 4, (0..16).map(|i| 1.0 + (i * i) as f64 * 0.1).collect()).unwrap();
    let zero = g2_loss(&label, &label).unwrap();
    assert_eq!(zero.total, 0.0);
    let shifted = label.map_valid(|v| v + 1.0);
    let out = g2_loss(&shifted, &label).unwrap();
    assert!(out.standardized_l1 < 1e-12 && out.gradient_term < 1e-12);
    assert!((out.total - 1.0).abs() < 1e-12);
}

#[test]
fn absolute_term_is_symmetric_and_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let (p, l) = random_pair(&mut rng);
        let (p, l) = (to_depth(&p), to_depth(&l));
        let (Ok(x), Ok(y)) = (g2_loss(&p, &l), g2_loss(&l, &p)) else { continue };
        assert_eq!(x.absolute_l1, y.absolute_l1);
        for v in [x.standardized_l1, x.absolute_l1, x.gradient_term] {
            assert!(v >= 0.0);
        }
    }
}

#[test]
fn errors_and_l1l2() {
    let a = DepthMap::from_values(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let b = DepthMap::from_values(4, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(g2_loss(&a, &b).unwrap_err().code(), "ShapeError");
    let sparse = DepthMap::from_values(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    assert_eq!(g2_loss(&a, &sparse).unwrap_err().code(), "InsufficientValid");
    let c = a.map_valid(|v| v + 2.0);
    let out = l1l2_loss(&c, &a).unwrap();
    assert_eq!((out.l1, out.l2, out.total), (2.0, 4.0, 6.0));
}
