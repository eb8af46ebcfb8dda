//! MiniRocket kernel structure and the floating-point PPV transform.
//!
//! The transform convolves a window with 84 fixed length-9 kernels over a
//! set of dilations. Each kernel has three taps weighted `+2` and six taps
//! weighted `-1`, so every kernel sums to zero. One feature is produced per
//! (kernel, dilation, bias) triple: the proportion of convolution outputs
//! strictly greater than the bias.
//!
//! Summation order inside every dot product is fixed (ascending channel,
//! then ascending tap) so float results are reproducible bit for bit.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Number of taps in every kernel.
pub const KERNEL_LENGTH: usize = 9;
/// Number of distinct weight patterns, C(9, 3).
pub const NUM_KERNELS: usize = 84;
/// Upper bound on distinct dilations per kernel.
pub const MAX_DILATIONS_PER_KERNEL: usize = 32;

pub const POSITIVE_WEIGHT: i32 = 2;
pub const NEGATIVE_WEIGHT: i32 = -1;

/// Sum of absolute tap weights of one kernel over one channel: 3·2 + 6·1.
pub const KERNEL_ABS_WEIGHT: u64 = 12;

/// A kernel: the three tap indices carrying weight `+2`. All other taps are `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeightPattern {
    pub taps: [u8; 3],
}

impl WeightPattern {
    pub fn weight(&self, tap: usize) -> i32 {
        if self.taps.iter().any(|&t| t as usize == tap) {
            POSITIVE_WEIGHT
        } else {
            NEGATIVE_WEIGHT
        }
    }

    pub fn weights(&self) -> [i32; KERNEL_LENGTH] {
        let mut w = [NEGATIVE_WEIGHT; KERNEL_LENGTH];
        for &t in &self.taps {
            w[t as usize] = POSITIVE_WEIGHT;
        }
        w
    }
}

/// All 84 three-of-nine patterns, in lexicographic order of tap triples.
pub fn build_kernels() -> Vec<WeightPattern> {
    let mut out = Vec::with_capacity(NUM_KERNELS);
    for a in 0..KERNEL_LENGTH as u8 {
        for b in a + 1..KERNEL_LENGTH as u8 {
            for c in b + 1..KERNEL_LENGTH as u8 {
                out.push(WeightPattern { taps: [a, b, c] });
            }
        }
    }
    out
}

/// Dilations and how many features each kernel gets at each dilation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DilationPlan {
    pub dilations: Vec<usize>,
    /// Features per kernel at the dilation with the same index.
    pub features_per_kernel: Vec<usize>,
}

impl DilationPlan {
    pub fn total_features(&self) -> usize {
        NUM_KERNELS * self.features_per_kernel.iter().sum::<usize>()
    }
}

/// Largest dilation that still fits a 9-tap kernel inside `window_length`.
pub fn max_dilation(window_length: usize) -> usize {
    (window_length.saturating_sub(1) / (KERNEL_LENGTH - 1)).max(1)
}

/// Exponentially spaced dilations with features spread across them.
///
/// Dilations are `floor(2^x)` for `x` evenly spaced in
/// `[0, log2((L - 1) / 8)]`, deduplicated. Features that do not divide evenly
/// go to the smallest dilations first.
pub fn plan_dilations(window_length: usize, feature_count: usize) -> Result<DilationPlan> {
    if window_length < KERNEL_LENGTH {
        return Err(Error::WindowTooShort {
            length: window_length,
            min: KERNEL_LENGTH,
        });
    }
    if feature_count < NUM_KERNELS || !feature_count.is_multiple_of(NUM_KERNELS) {
        return Err(Error::FeatureCount {
            count: feature_count,
            kernels: NUM_KERNELS,
        });
    }
    let per_kernel = feature_count / NUM_KERNELS;
    let steps = per_kernel.min(MAX_DILATIONS_PER_KERNEL);
    let multiplier = per_kernel as f64 / steps as f64;
    let max_exponent = ((window_length - 1) as f64 / (KERNEL_LENGTH - 1) as f64).log2();

    let mut dilations: Vec<usize> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for i in 0..steps {
        let x = if steps == 1 {
            0.0
        } else {
            max_exponent * i as f64 / (steps - 1) as f64
        };
        let d = (2f64.powf(x).floor() as usize).clamp(1, max_dilation(window_length));
        match dilations.last() {
            Some(&last) if last == d => *counts.last_mut().unwrap() += 1,
            _ => {
                dilations.push(d);
                counts.push(1);
            }
        }
    }
    let mut features: Vec<usize> = counts
        .iter()
        .map(|&c| (c as f64 * multiplier).floor() as usize)
        .collect();
    let mut remainder = per_kernel - features.iter().sum::<usize>();
    let mut i = 0;
    while remainder > 0 {
        features[i] += 1;
        remainder -= 1;
        i = (i + 1) % features.len();
    }
    Ok(DilationPlan {
        dilations,
        features_per_kernel: features,
    })
}

/// One multichannel window of accelerometer data.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    /// `samples[channel][time]`, milli-G.
    pub samples: Vec<Vec<f32>>,
    pub sample_rate: f32,
    pub label: Option<u16>,
    /// Identity of the recording this window was cut from, if any.
    pub recording: Option<u32>,
}

impl Window {
    pub fn new(samples: Vec<Vec<f32>>, sample_rate: f32) -> Self {
        Self {
            samples,
            sample_rate,
            label: None,
            recording: None,
        }
    }

    pub fn univariate(samples: Vec<f32>, sample_rate: f32) -> Self {
        Self::new(vec![samples], sample_rate)
    }

    pub fn with_label(mut self, label: u16) -> Self {
        self.label = Some(label);
        self
    }

    pub fn channels(&self) -> usize {
        self.samples.len()
    }

    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::NoChannels);
        }
        let len = self.len();
        if self.samples.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidWindow("ragged channels".into()));
        }
        if len < KERNEL_LENGTH {
            return Err(Error::WindowTooShort {
                length: len,
                min: KERNEL_LENGTH,
            });
        }
        if self.samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidWindow("non-finite sample".into()));
        }
        Ok(())
    }
}

/// One (kernel, dilation) combination and the features it feeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelDilation {
    /// Index into [`build_kernels`].
    pub kernel: u16,
    pub dilation: u32,
    pub padding: bool,
    /// Sorted, distinct channel indices summed in the dot product.
    pub channels: Vec<u16>,
    pub first_feature: u32,
    pub feature_count: u32,
}

impl KernelDilation {
    pub fn pattern(&self) -> WeightPattern {
        build_kernels()[self.kernel as usize]
    }

    /// Number of output positions compared against each bias of this pair.
    pub fn comparison_count(&self, window_length: usize) -> usize {
        if self.padding {
            window_length
        } else {
            window_length - (KERNEL_LENGTH - 1) * self.dilation as usize
        }
    }

    /// Weighted input footprint: Σ|w| over taps and assigned channels.
    pub fn weighted_footprint(&self) -> u64 {
        KERNEL_ABS_WEIGHT * self.channels.len() as u64
    }
}

/// Kernel structure before bias fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelStructure {
    pub window_length: usize,
    pub channels: usize,
    pub plan: DilationPlan,
    /// Ordered dilation-major, then kernel index.
    pub pairs: Vec<KernelDilation>,
    pub seed: u64,
}

impl KernelStructure {
    /// Lays out every (kernel, dilation) pair with its padding flag and a
    /// seeded random channel subset.
    pub fn new(window_length: usize, channels: usize, feature_count: usize, seed: u64) -> Result<Self> {
        if channels == 0 {
            return Err(Error::NoChannels);
        }
        let plan = plan_dilations(window_length, feature_count)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let max_channels = channels.min(KERNEL_LENGTH);
        let mut pairs = Vec::with_capacity(plan.dilations.len() * NUM_KERNELS);
        let mut first_feature = 0u32;
        for (di, (&dilation, &per_kernel)) in plan
            .dilations
            .iter()
            .zip(&plan.features_per_kernel)
            .enumerate()
        {
            for kernel in 0..NUM_KERNELS {
                let exponent: f64 = rng.gen_range(0.0..((max_channels + 1) as f64).log2());
                let subset = (2f64.powf(exponent) as usize).clamp(1, max_channels);
                let mut chosen: Vec<u16> = index::sample(&mut rng, channels, subset)
                    .into_iter()
                    .map(|c| c as u16)
                    .collect();
                chosen.sort_unstable();
                pairs.push(KernelDilation {
                    kernel: kernel as u16,
                    dilation: dilation as u32,
                    padding: (di + kernel) % 2 == 0,
                    channels: chosen,
                    first_feature,
                    feature_count: per_kernel as u32,
                });
                first_feature += per_kernel as u32;
            }
        }
        Ok(Self {
            window_length,
            channels,
            plan,
            pairs,
            seed,
        })
    }

    pub fn feature_count(&self) -> usize {
        self.pairs.iter().map(|p| p.feature_count as usize).sum()
    }

    /// C_k for every feature, in feature order.
    pub fn comparison_counts(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.feature_count());
        for pair in &self.pairs {
            let c = pair.comparison_count(self.window_length) as u32;
            out.extend(std::iter::repeat_n(c, pair.feature_count as usize));
        }
        out
    }
}

/// How bias quantiles are spaced in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuantilePolicy {
    /// `(i · φ) mod 1` for i = 1, 2, ... (golden-ratio low-discrepancy sequence).
    #[default]
    GoldenRatio,
}

impl QuantilePolicy {
    pub fn quantiles(self, n: usize) -> Vec<f64> {
        match self {
            QuantilePolicy::GoldenRatio => {
                let phi = (5f64.sqrt() + 1.0) / 2.0;
                (1..=n).map(|i| (i as f64 * phi) % 1.0).collect()
            }
        }
    }
}

/// Convolves `window` with one dilated kernel, summing over `channels`.
///
/// With padding the output has the window's length and out-of-range samples
/// read as zero; without it the output covers only full-overlap positions.
pub fn convolve(
    window: &Window,
    pattern: WeightPattern,
    dilation: usize,
    channels: &[u16],
    padding: bool,
) -> Result<Vec<f32>> {
    if channels.is_empty() {
        return Err(Error::NoChannels);
    }
    let len = window.len();
    let span = (KERNEL_LENGTH - 1) * dilation;
    if !padding && len <= span {
        return Err(Error::WindowTooShort {
            length: len,
            min: span + 1,
        });
    }
    for &c in channels {
        if c as usize >= window.channels() {
            return Err(Error::ChannelMismatch {
                expected: c as usize + 1,
                found: window.channels(),
            });
        }
    }
    let weights = pattern.weights().map(|w| w as f32);
    let (out_len, offset) = if padding {
        (len, (span / 2) as isize)
    } else {
        (len - span, 0)
    };
    let mut out = vec![0f32; out_len];
    for (p, slot) in out.iter_mut().enumerate() {
        let mut acc = 0f32;
        for &c in channels {
            let x = &window.samples[c as usize];
            for (tap, &w) in weights.iter().enumerate() {
                let idx = p as isize + (tap * dilation) as isize - offset;
                if idx >= 0 && (idx as usize) < len {
                    acc += w * x[idx as usize];
                }
            }
        }
        *slot = acc;
    }
    Ok(out)
}

/// Linear-interpolated empirical quantile of `sorted` (ascending, non-empty).
fn quantile(sorted: &[f32], q: f64) -> f32 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    let a = sorted[lo] as f64;
    let b = sorted[hi] as f64;
    (a + frac * (b - a)) as f32
}

/// Fits one bias per feature from quantiles of a seeded-random training
/// window's (padded) convolution output.
pub fn fit_biases(
    training: &[Window],
    structure: &KernelStructure,
    policy: QuantilePolicy,
    seed: u64,
) -> Result<Vec<f32>> {
    if training.is_empty() {
        return Err(Error::NoTrainingWindows);
    }
    for w in training {
        w.validate()?;
        check_shape(w, structure)?;
    }
    let patterns = build_kernels();
    let quantiles = policy.quantiles(structure.feature_count());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut biases = Vec::with_capacity(quantiles.len());
    for pair in &structure.pairs {
        let example = &training[rng.gen_range(0..training.len())];
        let mut conv = convolve(
            example,
            patterns[pair.kernel as usize],
            pair.dilation as usize,
            &pair.channels,
            true,
        )?;
        conv.sort_by(f32::total_cmp);
        let start = pair.first_feature as usize;
        for &q in &quantiles[start..start + pair.feature_count as usize] {
            biases.push(quantile(&conv, q));
        }
    }
    Ok(biases)
}

fn check_shape(window: &Window, structure: &KernelStructure) -> Result<()> {
    if window.channels() != structure.channels {
        return Err(Error::ChannelMismatch {
            expected: structure.channels,
            found: window.channels(),
        });
    }
    if window.len() != structure.window_length {
        return Err(Error::LengthMismatch {
            expected: structure.window_length,
            found: window.len(),
        });
    }
    Ok(())
}

/// The fitted transform model.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSet {
    pub structure: KernelStructure,
    pub patterns: Vec<WeightPattern>,
    /// One bias per feature.
    pub biases: Vec<f32>,
    /// C_k per feature.
    pub comparison_counts: Vec<u32>,
}

impl KernelSet {
    pub fn fit(training: &[Window], feature_count: usize, seed: u64) -> Result<Self> {
        let first = training.first().ok_or(Error::NoTrainingWindows)?;
        let structure = KernelStructure::new(first.len(), first.channels(), feature_count, seed)?;
        let biases = fit_biases(training, &structure, QuantilePolicy::GoldenRatio, seed)?;
        Ok(Self::from_parts(structure, biases))
    }

    pub fn from_parts(structure: KernelStructure, biases: Vec<f32>) -> Self {
        let comparison_counts = structure.comparison_counts();
        Self {
            structure,
            patterns: build_kernels(),
            biases,
            comparison_counts,
        }
    }

    pub fn feature_count(&self) -> usize {
        self.biases.len()
    }

    pub fn window_length(&self) -> usize {
        self.structure.window_length
    }

    pub fn channels(&self) -> usize {
        self.structure.channels
    }

    pub fn seed(&self) -> u64 {
        self.structure.seed
    }

    /// Per-feature count of convolution outputs strictly above the bias.
    pub fn positive_counts(&self, window: &Window) -> Result<Vec<u32>> {
        check_shape(window, &self.structure)?;
        let mut counts = Vec::with_capacity(self.feature_count());
        for pair in &self.structure.pairs {
            let conv = convolve(
                window,
                self.patterns[pair.kernel as usize],
                pair.dilation as usize,
                &pair.channels,
                pair.padding,
            )?;
            let start = pair.first_feature as usize;
            for &bias in &self.biases[start..start + pair.feature_count as usize] {
                counts.push(conv.iter().filter(|&&v| v > bias).count() as u32);
            }
        }
        Ok(counts)
    }

    /// PPV features in `[0, 1]`.
    pub fn transform(&self, window: &Window) -> Result<FeatureVector> {
        let counts = self.positive_counts(window)?;
        let values = counts
            .iter()
            .zip(&self.comparison_counts)
            .map(|(&n, &c)| n as f32 / c as f32)
            .collect();
        Ok(FeatureVector::Ppv(values))
    }
}

/// Output of either transform path.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureVector {
    /// Floating-point PPV values, each in `[0, 1]`.
    Ppv(Vec<f32>),
    /// Integer positive counts, feature `k` in `[0, C_k]`.
    Counts(Vec<u32>),
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        match self {
            FeatureVector::Ppv(v) => v.len(),
            FeatureVector::Counts(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_quantized(&self) -> bool {
        matches!(self, FeatureVector::Counts(_))
    }

    pub fn as_ppv(&self) -> Option<&[f32]> {
        match self {
            FeatureVector::Ppv(v) => Some(v),
            FeatureVector::Counts(_) => None,
        }
    }

    pub fn as_counts(&self) -> Option<&[u32]> {
        match self {
            FeatureVector::Counts(v) => Some(v),
            FeatureVector::Ppv(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(len: usize) -> Window {
        Window::univariate((0..len).map(|i| ((i * 7919) % 97) as f32 - 48.0).collect(), 200.0)
    }

    #[test]
    fn kernels_are_lexicographic_and_zero_sum() {
        let k = build_kernels();
        assert_eq!(k.len(), NUM_KERNELS);
        assert_eq!(k[0].weights(), [2, 2, 2, -1, -1, -1, -1, -1, -1]);
        assert_eq!(k[83].taps, [6, 7, 8]);
        assert!(k.windows(2).all(|w| w[0] < w[1]));
        for p in &k {
            assert_eq!(p.weights().iter().sum::<i32>(), 0);
        }
    }

    #[test]
    fn dilation_bounds() {
        let plan = plan_dilations(80, 84).unwrap();
        assert_eq!(plan.dilations, vec![1]);
        assert_eq!(plan.total_features(), 84);
        for &fc in &[168, 252, 336, 84 * 40] {
            let plan = plan_dilations(80, fc).unwrap();
            assert!(plan.dilations.iter().all(|&d| (1..=9).contains(&d)));
            assert_eq!(plan.total_features(), fc);
        }
        assert_eq!(plan_dilations(9, 84).unwrap().dilations, vec![1]);
        assert_eq!(plan_dilations(9, 336).unwrap().dilations, vec![1]);
    }

    #[test]
    fn two_features_per_kernel() {
        let plan = plan_dilations(80, 168).unwrap();
        assert_eq!(plan.dilations, vec![1, 9]);
        assert_eq!(plan.features_per_kernel, vec![1, 1]);
    }

    #[test]
    fn plan_errors() {
        assert!(matches!(plan_dilations(8, 84), Err(Error::WindowTooShort { .. })));
        assert!(matches!(plan_dilations(80, 100), Err(Error::FeatureCount { .. })));
        assert!(matches!(plan_dilations(80, 0), Err(Error::FeatureCount { .. })));
    }

    #[test]
    fn convolve_zero_and_constant() {
        let k = build_kernels();
        let zero = Window::univariate(vec![0.0; 30], 200.0);
        assert!(convolve(&zero, k[5], 2, &[0], true).unwrap().iter().all(|&v| v == 0.0));
        let dc = Window::univariate(vec![3.25; 30], 200.0);
        for p in &k {
            let out = convolve(&dc, *p, 3, &[0], false).unwrap();
            assert_eq!(out.len(), 30 - 24);
            assert!(out.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn convolve_impulse_gives_reversed_weights() {
        let mut x = vec![0.0f32; 21];
        x[10] = 1.0;
        let w = Window::univariate(x, 200.0);
        let out = convolve(&w, build_kernels()[0], 1, &[0], true).unwrap();
        // output[p] = Σ_tap w[tap]·x[p + tap - 4]; impulse at 10 hits tap = 14 - p
        for p in 6..=14 {
            assert_eq!(out[p], build_kernels()[0].weight(14 - p) as f32);
        }
        assert_eq!(out[5], 0.0);
        assert_eq!(out[15], 0.0);
    }

    #[test]
    fn convolve_requires_channels() {
        let w = ramp(20);
        assert_eq!(convolve(&w, build_kernels()[0], 1, &[], true), Err(Error::NoChannels));
    }

    #[test]
    fn biases_of_zero_and_constant_windows() {
        let s = KernelStructure::new(40, 1, 168, 3).unwrap();
        let zero = [Window::univariate(vec![0.0; 40], 200.0)];
        assert!(fit_biases(&zero, &s, QuantilePolicy::GoldenRatio, 3)
            .unwrap()
            .iter()
            .all(|&b| b == 0.0));
        assert_eq!(
            fit_biases(&[], &s, QuantilePolicy::GoldenRatio, 3),
            Err(Error::NoTrainingWindows)
        );
    }

    #[test]
    fn fit_is_deterministic() {
        let train: Vec<Window> = (0..5).map(|i| {
            let mut w = ramp(60);
            w.samples[0].rotate_left(i * 3);
            w
        }).collect();
        let a = KernelSet::fit(&train, 252, 11).unwrap();
        let b = KernelSet::fit(&train, 252, 11).unwrap();
        assert_eq!(a, b);
        let c = KernelSet::fit(&train, 252, 12).unwrap();
        assert_ne!(a.biases, c.biases);
    }

    #[test]
    fn padding_alternates_and_counts_are_exact() {
        let s = KernelStructure::new(80, 1, 168, 0).unwrap();
        let padded = s.pairs.iter().filter(|p| p.padding).count();
        assert_eq!(padded, s.pairs.len() / 2);
        let counts = s.comparison_counts();
        for (pair, &c) in s.pairs.iter().zip(counts.iter()) {
            let expect = if pair.padding { 80 } else { 80 - 8 * pair.dilation as usize };
            assert_eq!(c as usize, expect);
            assert!(c > 0 && c as usize <= 80);
        }
    }

    #[test]
    fn multichannel_subsets_are_sorted_and_in_range() {
        let s = KernelStructure::new(50, 3, 336, 9).unwrap();
        for p in &s.pairs {
            assert!(!p.channels.is_empty() && p.channels.len() <= 3);
            assert!(p.channels.windows(2).all(|w| w[0] < w[1]));
            assert!(p.channels.iter().all(|&c| c < 3));
        }
    }

    #[test]
    fn ppv_extremes() {
        let w = ramp(40);
        let train = [w.clone()];
        let mut ks = KernelSet::fit(&train, 84, 0).unwrap();
        ks.biases.iter_mut().for_each(|b| *b = f32::NEG_INFINITY);
        assert!(ks.transform(&w).unwrap().as_ppv().unwrap().iter().all(|&v| v == 1.0));
        ks.biases.iter_mut().for_each(|b| *b = f32::INFINITY);
        assert!(ks.transform(&w).unwrap().as_ppv().unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dc_input_follows_bias_sign() {
        let dc = Window::univariate(vec![500.0; 40], 200.0);
        let mut ks = KernelSet::fit(&[ramp(40)], 84, 0).unwrap();
        // keep only unpadded pairs: interior conv of a DC input is exactly zero
        for (i, pair) in ks.structure.pairs.clone().iter().enumerate() {
            ks.biases[i] = if i % 2 == 0 { -0.5 } else { 0.5 };
            let t = ks.transform(&dc).unwrap();
            if !pair.padding {
                let expect = if i % 2 == 0 { 1.0 } else { 0.0 };
                assert_eq!(t.as_ppv().unwrap()[i], expect);
            }
        }
    }

    #[test]
    fn transform_shape_errors() {
        let ks = KernelSet::fit(&[ramp(40)], 84, 0).unwrap();
        let two = Window::new(vec![vec![0.0; 40]; 2], 200.0);
        assert!(matches!(ks.transform(&two), Err(Error::ChannelMismatch { .. })));
        assert!(matches!(ks.transform(&ramp(41)), Err(Error::LengthMismatch { .. })));
    }
}
