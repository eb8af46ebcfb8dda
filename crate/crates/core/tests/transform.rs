mod common;

use common::{naive_counts, oracle_triples};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rocketlite::transform::{
    build_kernels, convolve, max_dilation, plan_dilations, KernelSet, KernelStructure, Window, KERNEL_LENGTH,
    NUM_KERNELS,
};

fn random_windows(rng: &mut ChaCha8Rng, n: usize, channels: usize, len: usize) -> Vec<Window> {
    (0..n)
        .map(|_| {
            let samples = (0..channels)
                .map(|_| (0..len).map(|_| rng.gen_range(-2000.0f32..2000.0)).collect())
                .collect();
            Window::new(samples, 100.0)
        })
        .collect()
}

#[test]
fn kernel_bank_matches_enumeration() {
    let kernels = build_kernels();
    assert_eq!(kernels.len(), NUM_KERNELS);
    for (pattern, triple) in kernels.iter().zip(oracle_triples()) {
        let w = pattern.weights();
        assert_eq!(w.iter().sum::<i32>(), 0);
        for tap in 0..KERNEL_LENGTH {
            assert_eq!(w[tap], if triple.contains(&tap) { 2 } else { -1 });
        }
    }
}

#[test]
fn dilation_plan_shape() {
    for len in [9, 10, 16, 40, 64, 80, 150, 200] {
        for fc in [84, 168, 252, 336] {
            let plan = plan_dilations(len, fc).unwrap();
            assert_eq!(plan.total_features(), fc, "len {len} fc {fc}");
            let maxd = max_dilation(len);
            let mut prev = 0;
            for &d in &plan.dilations {
                assert!(d > prev && d <= maxd, "len {len}: dilation {d}");
                assert!((KERNEL_LENGTH - 1) * d <= len - 1);
                prev = d;
            }
        }
    }
    assert!(plan_dilations(80, 100).is_err());
    assert!(plan_dilations(8, 84).is_err());
}

#[test]
fn oracle_equivalence_fixed_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for &(channels, len, fc) in &[(1, 9, 84), (1, 20, 84), (1, 64, 336), (3, 48, 168), (2, 33, 252)] {
        let train = random_windows(&mut rng, 6, channels, len);
        let ks = KernelSet::fit(&train, fc, rng.gen()).unwrap();
        for w in random_windows(&mut rng, 10, channels, len) {
            assert_eq!(ks.positive_counts(&w).unwrap(), naive_counts(&w, &ks));
        }
    }
}

#[test]
fn ppv_is_count_over_comparisons() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let train = random_windows(&mut rng, 8, 1, 80);
    let ks = KernelSet::fit(&train, 84, 9).unwrap();
    let w = &random_windows(&mut rng, 1, 1, 80)[0];
    let counts = naive_counts(w, &ks);
    let ppv = ks.transform(w).unwrap();
    let ppv = ppv.as_ppv().unwrap();
    for ((&p, &n), &c) in ppv.iter().zip(&counts).zip(&ks.comparison_counts) {
        assert!((0.0..=1.0).contains(&p));
        assert_eq!(p, n as f32 / c as f32);
    }
}

#[test]
fn dc_input_interior_is_zero() {
    let len = 64;
    let w = Window::univariate(vec![1234.5; len], 100.0);
    for pattern in build_kernels() {
        for d in [1, 2, 4, 7] {
            let full = convolve(&w, pattern, d, &[0], false).unwrap();
            assert!(full.iter().all(|&v| v == 0.0));
            let padded = convolve(&w, pattern, d, &[0], true).unwrap();
            let half = 4 * d;
            assert!(padded[half..len - half].iter().all(|&v| v == 0.0));
        }
    }
}

#[test]
fn dc_features_follow_bias_sign() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let train = random_windows(&mut rng, 8, 1, 60);
    let ks = KernelSet::fit(&train, 168, 3).unwrap();
    let w = Window::univariate(vec![500.0; 60], 100.0);
    let ppv = ks.transform(&w).unwrap();
    for pair in &ks.structure.pairs {
        if pair.padding {
            continue;
        }
        for f in pair.first_feature..pair.first_feature + pair.feature_count {
            let b = ks.biases[f as usize];
            let t = ppv.as_ppv().unwrap()[f as usize];
            if b < 0.0 {
                assert_eq!(t, 1.0);
            } else if b > 0.0 {
                assert_eq!(t, 0.0);
            }
        }
    }
}

#[test]
fn fitting_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let train = random_windows(&mut rng, 10, 3, 50);
    let a = KernelSet::fit(&train, 168, 77).unwrap();
    let b = KernelSet::fit(&train, 168, 77).unwrap();
    assert_eq!(a, b);
    let bits = |k: &KernelSet| k.biases.iter().map(|b| b.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    let c = KernelSet::fit(&train, 168, 78).unwrap();
    assert_ne!(bits(&a), bits(&c));
}

#[test]
fn channel_subsets_are_valid() {
    let s = KernelStructure::new(40, 5, 252, 1).unwrap();
    let mut next = 0;
    for pair in &s.pairs {
        assert!(!pair.channels.is_empty());
        assert!(pair.channels.windows(2).all(|w| w[0] < w[1]));
        assert!(pair.channels.iter().all(|&c| (c as usize) < 5));
        assert_eq!(pair.first_feature, next);
        next += pair.feature_count;
    }
    assert_eq!(next, 252);
}

#[test]
fn comparison_counts_match_definition() {
    let s = KernelStructure::new(80, 1, 84, 0).unwrap();
    let counts = s.comparison_counts();
    for pair in &s.pairs {
        let d = pair.dilation as usize;
        let expect = if pair.padding { 80 } else { 80 - 8 * d };
        for f in pair.first_feature..pair.first_feature + pair.feature_count {
            assert_eq!(counts[f as usize] as usize, expect);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_equivalence(
        len in 9usize..=64,
        channels in 1usize..=3,
        fc_mult in 1usize..=4,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train = random_windows(&mut rng, 4, channels, len);
        let ks = KernelSet::fit(&train, 84 * fc_mult, seed).unwrap();
        for w in random_windows(&mut rng, 3, channels, len) {
            prop_assert_eq!(ks.positive_counts(&w).unwrap(), naive_counts(&w, &ks));
        }
    }

    #[test]
    fn ppv_bounded(samples in prop::collection::vec(-16000.0f32..16000.0, 80)) {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let train = random_windows(&mut rng, 4, 1, 80);
        let ks = KernelSet::fit(&train, 84, 1).unwrap();
        let f = ks.transform(&Window::univariate(samples, 200.0)).unwrap();
        prop_assert!(f.as_ppv().unwrap().iter().all(|t| (0.0..=1.0).contains(t)));
    }

    #[test]
    fn shift_covariance(
        samples in prop::collection::vec(-1000.0f32..1000.0, 40),
        shift in 0usize..20,
        kernel in 0usize..NUM_KERNELS,
    ) {
        let pattern = build_kernels()[kernel];
        let w = Window::univariate(samples.clone(), 1.0);
        let mut shifted = vec![0.0; shift];
        shifted.extend_from_slice(&samples[..40 - shift]);
        let ws = Window::univariate(shifted, 1.0);
        let a = convolve(&w, pattern, 1, &[0], false).unwrap();
        let b = convolve(&ws, pattern, 1, &[0], false).unwrap();
        for p in 0..a.len() {
            if p + shift < b.len() {
                prop_assert_eq!(a[p].to_bits(), b[p + shift].to_bits());
            }
        }
    }
}
