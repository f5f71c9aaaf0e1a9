use std::collections::BTreeSet;

use depthsynth_core::samplers::{
    beam_layout, sample, sample_features, sample_lidar, sample_uniform, uniform_count, FeatureParams, LidarParams,
    SampleContext,
};
use depthsynth_core::{seeded_rng, CameraIntrinsics, DepthMap, MaskedGrid, SamplerSpec, SparseDepth};
use depthsynth_testkit::scenes::scene;
use proptest::prelude::*;

fn scene_maps(w: usize, h: usize) -> (DepthMap<f64>, MaskedGrid<f64>, CameraIntrinsics<f64>) {
    let s = scene(1, 0, w, h);
    let [fx, fy, cx, cy] = s.intrinsics;
    (
        DepthMap::from_values(w, h, s.depth).unwrap(),
        MaskedGrid::dense(w, h, s.image).unwrap(),
        CameraIntrinsics::new(fx, fy, cx, cy).unwrap(),
    )
}

fn assert_consistent(dense: &DepthMap<f64>, s: &SparseDepth<f64>) {
    let mut seen = BTreeSet::new();
    for p in &s.points {
        assert!(seen.insert(p.index), "duplicate pixel {}", p.index);
        assert_eq!(Some(p.depth).map(f64::to_bits), dense.get(p.index).map(f64::to_bits));
    }
    assert!(s.len() >= 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn uniform_counts_and_positions(
        v in prop::collection::vec(prop_oneof![3 => 0.1f64..30.0, 1 => Just(0.0)], 2..400),
        rho in 1e-4f64..=1.0,
        seed in any::<u64>(),
    ) {
        let d = DepthMap::from_values(v.len(), 1, v).unwrap();
        let eta = d.valid_count();
        prop_assume!(eta >= 2);
        let s = sample_uniform(&d, rho, &mut seeded_rng(seed)).unwrap();
        let expected = ((rho * eta as f64).round() as usize).max(2).min(eta);
        prop_assert_eq!(s.len(), expected);
        prop_assert_eq!(uniform_count(rho, eta), expected);
        assert_consistent(&d, &s);
    }
}

#[test]
fn uniform_examples() {
    let d = DepthMap::from_values(1000, 1, (0..1000).map(|i| 1.0 + i as f64).collect()).unwrap();
    assert_eq!(sample_uniform(&d, 0.01, &mut seeded_rng(0)).unwrap().len(), 10);
    assert_eq!(sample_uniform(&d, 1e-5, &mut seeded_rng(0)).unwrap().len(), 2);
    let all = sample_uniform(&d, 1.0, &mut seeded_rng(0)).unwrap();
    assert_eq!(all, SparseDepth::from_depth_map(&d));
    let one = DepthMap::from_values(2, 1, vec![1.0, 0.0]).unwrap();
    assert_eq!(sample_uniform(&one, 0.5, &mut seeded_rng(0)).unwrap_err().code(), "InsufficientValid");
}

#[test]
fn smaller_fractions_are_nested() {
    let (d, _, _) = scene_maps(160, 120);
    for seed in 0..10 {
        let sets: Vec<BTreeSet<usize>> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&rho| sample_uniform(&d, rho, &mut seeded_rng(seed)).unwrap().points.iter().map(|p| p.index).collect())
            .collect();
        assert!(sets[1].is_subset(&sets[0]));
        assert!(sets[2].is_subset(&sets[1]));
    }
}

#[test]
fn lidar_beam_clusters() {
    let (d, _, k) = scene_maps(200, 150);
    for beams in [64, 16, 4] {
        let p = LidarParams::with_beams(beams);
        let layout = beam_layout(&d, &k, &p).unwrap();
        let s = sample_lidar(&d, &k, &p, &mut seeded_rng(3)).unwrap();
        assert_consistent(&d, &s);
        let cloud = depthsynth_core::unproject(&s.to_depth_map(), &k).unwrap();
        let mut clusters = BTreeSet::new();
        for q in &cloud.points {
            let el = (-q.y).atan2((q.x * q.x + q.z * q.z).sqrt());
            let (beam, dist) = layout.nearest(el);
            assert!(dist < layout.half_window());
            clusters.insert(beam);
        }
        assert!(clusters.len() <= beams);
    }
    let count = |b| sample_lidar(&d, &k, &LidarParams::with_beams(b), &mut seeded_rng(0)).unwrap().len();
    assert!(count(64) > count(16));
    assert!(count(16) > count(4));
}

#[test]
fn feature_budgets_are_exact() {
    let (d, img, _) = scene_maps(640, 480);
    for budget in [1500, 500, 150] {
        let s = sample_features(&d, &img, &FeatureParams::with_budget(budget), &mut seeded_rng(8)).unwrap();
        assert_eq!(s.len(), budget);
        assert_consistent(&d, &s);
    }
    // budget above η
    let small = DepthMap::from_values(5, 1, vec![1.0, 2.0, 0.0, 3.0, 4.0]).unwrap();
    let flat = MaskedGrid::dense(5, 1, vec![0.5; 5]).unwrap();
    let s = sample_features(&small, &flat, &FeatureParams::with_budget(10), &mut seeded_rng(0)).unwrap();
    assert_eq!(s.len(), 4);
}

#[test]
fn flat_image_uses_the_fill_path() {
    let d = DepthMap::from_values(30, 20, vec![2.0; 600]).unwrap();
    let flat = MaskedGrid::dense(30, 20, vec![0.3; 600]).unwrap();
    let a = sample_features(&d, &flat, &FeatureParams::with_budget(40), &mut seeded_rng(1)).unwrap();
    let b = sample_features(&d, &flat, &FeatureParams::with_budget(40), &mut seeded_rng(2)).unwrap();
    assert_eq!(a.len(), 40);
    assert_ne!(a, b, "different seeds should give different random fills");
}

#[test]
fn sampling_is_deterministic_across_threads() {
    let (d, img, k) = scene_maps(120, 90);
    let specs = [
        SamplerSpec::uniform(0.01),
        SamplerSpec::Lidar(LidarParams::with_beams(16)),
        SamplerSpec::Features(FeatureParams::with_budget(150)),
    ];
    let ctx = SampleContext { intrinsics: Some(&k), image: Some(&img) };
    let reference: Vec<_> = specs.iter().map(|s| sample(&d, s, ctx, &mut seeded_rng(77)).unwrap()).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..4)
            .map(|_| scope.spawn(|| specs.iter().map(|s| sample(&d, s, ctx, &mut seeded_rng(77)).unwrap()).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), reference);
        }
    });
}
