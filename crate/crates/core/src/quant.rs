//! Integer-only inference: scale-factor calibration, parameter quantization,
//! and the fixed-point transform/predict path.
//!
//! Two scale factors size the arithmetic to a `b`-bit signed accumulator.
//! `S1` scales clamped inputs and kernel biases so that no dilated dot
//! product can exceed `2^(b-1) - 1`:
//!
//! ```text
//! S1 = floor((2^(b-1) - 1) / max(I_m · N_m, B_m))
//! ```
//!
//! `S2` scales PPV features, classifier weights (once) and classifier biases
//! (twice), bounded by the worst per-class one-signed weight sum `f(k)`:
//!
//! ```text
//! S2 = floor(sqrt((2^(b-1) - 1) / max_k f(k)))
//! f(k) = max(w⁺_k + |b_k|, -w⁻_k + |b_k|)
//! ```
//!
//! All runtime arithmetic is performed modulo `2^b` (two's complement) so an
//! unsound calibration shows up as a wrong answer rather than being hidden by
//! a wider machine word.

use crate::error::{Error, Result};
use crate::metrics::{accuracy, binary_f1};
use crate::ridge::{argmax, predict_float, LinearClassifier};
use crate::transform::{build_kernels, FeatureVector, KernelSet, Window, KERNEL_LENGTH};

pub const DEFAULT_BIT_WIDTH: u32 = 32;
/// Input clamp in milli-G.
pub const DEFAULT_INPUT_CLAMP_MG: u32 = 16_000;
pub const MIN_BIT_WIDTH: u32 = 8;
pub const MAX_BIT_WIDTH: u32 = 64;

/// `2^(bits-1) - 1`.
pub fn max_signed(bits: u32) -> i128 {
    (1i128 << (bits - 1)) - 1
}

fn check_bits(bits: u32) -> Result<()> {
    if !(MIN_BIT_WIDTH..=MAX_BIT_WIDTH).contains(&bits) {
        return Err(Error::InvalidCalibration(format!(
            "bit width {bits} outside {MIN_BIT_WIDTH}..={MAX_BIT_WIDTH}"
        )));
    }
    Ok(())
}

/// Scale factors and the bounds they were derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationCalibration {
    pub bit_width: u32,
    /// `I_m`, milli-G.
    pub input_clamp: u32,
    /// `N_m`: largest weighted footprint Σ|w| over any comparison.
    pub max_footprint: u64,
    /// `B_m`: largest |bias| of the transform.
    pub max_abs_bias: f64,
    pub s1: i64,
    pub s2: i64,
}

/// `S1` from its bounds.
pub fn s1_from_bounds(input_clamp: u64, max_footprint: u64, max_abs_bias: f64, bits: u32) -> Result<i64> {
    check_bits(bits)?;
    let limit = max_signed(bits);
    let input_bound = input_clamp as i128 * max_footprint as i128;
    let s1 = if (input_bound as f64) >= max_abs_bias {
        if input_bound == 0 {
            return Err(Error::InvalidCalibration("input bound is zero".into()));
        }
        limit / input_bound
    } else {
        floor_div_real(limit, max_abs_bias)
    };
    if s1 < 1 {
        return Err(Error::BitWidthInsufficient { bits });
    }
    Ok(i64::try_from(s1).unwrap_or(i64::MAX))
}

/// Exact test of `q · f <= limit` for finite `f > 0`, with `q < 2^64`.
fn scaled_fits(q: u128, f: f64, limit: i128) -> bool {
    let bits = f.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1 << 52) - 1)) as u128;
    let (mantissa, e) = if exp == 0 { (frac, -1074) } else { (frac | 1 << 52, exp - 1075) };
    // q · mantissa < 2^117
    let lhs = q * mantissa;
    let limit = limit as u128;
    if e >= 0 {
        e < 128 && lhs <= limit >> e
    } else {
        let k = (-e) as u32;
        let ceil = if k >= 128 { u128::from(lhs > 0) } else { (lhs >> k) + u128::from(lhs & ((1 << k) - 1) != 0) };
        ceil <= limit
    }
}

/// `floor(limit / divisor)` for a real divisor, evaluated exactly.
fn floor_div_real(limit: i128, divisor: f64) -> i128 {
    let mut s = ((limit as f64 / divisor).floor() as i128).clamp(0, i64::MAX as i128);
    while s > 0 && !scaled_fits(s as u128, divisor, limit) {
        s -= 1;
    }
    while scaled_fits((s + 1) as u128, divisor, limit) {
        s += 1;
    }
    s
}

/// Transform-side calibration: computes `N_m`, `B_m` and `S1` for a fitted
/// kernel set. `N_m` counts weight magnitudes, 12 per assigned channel.
pub fn calibrate_s1(kernels: &KernelSet, input_clamp: u32, bits: u32) -> Result<(i64, u64, f64)> {
    if input_clamp == 0 {
        return Err(Error::InvalidCalibration("input clamp must be positive".into()));
    }
    let max_footprint = kernels
        .structure
        .pairs
        .iter()
        .map(|p| p.weighted_footprint())
        .max()
        .ok_or(Error::InvalidCalibration("kernel set has no pairs".into()))?;
    let max_abs_bias = kernels.biases.iter().fold(0f64, |m, &b| m.max((b as f64).abs()));
    if !max_abs_bias.is_finite() {
        return Err(Error::InvalidCalibration("non-finite bias".into()));
    }
    let s1 = s1_from_bounds(input_clamp as u64, max_footprint, max_abs_bias, bits)?;
    Ok((s1, max_footprint, max_abs_bias))
}

/// `f(k)` for every class.
pub fn class_bounds(classifier: &LinearClassifier) -> Vec<f64> {
    (0..classifier.class_count())
        .map(|k| {
            let (pos, neg) = classifier.class_weights(k).fold((0.0, 0.0), |(p, n), w| {
                if w > 0.0 {
                    (p + w, n)
                } else {
                    (p, n + w)
                }
            });
            let bias = classifier.biases[k].abs();
            f64::max(pos + bias, -neg + bias)
        })
        .collect()
}

/// `S2` from the largest `f(k)`.
pub fn s2_from_bound(max_f: f64, bits: u32) -> Result<i64> {
    check_bits(bits)?;
    if !(max_f > 0.0) || !max_f.is_finite() {
        return Err(Error::DegenerateClassifier);
    }
    let limit = max_signed(bits);
    let mut s = (((limit as f64) / max_f).sqrt().floor() as i128).clamp(0, u32::MAX as i128);
    let fits = |s: i128| scaled_fits((s * s) as u128, max_f, limit);
    while s > 0 && !fits(s) {
        s -= 1;
    }
    while fits(s + 1) {
        s += 1;
    }
    if s < 1 {
        return Err(Error::BitWidthInsufficient { bits });
    }
    Ok(s as i64)
}

/// Predict-side calibration from the classifier alone.
pub fn calibrate_s2(classifier: &LinearClassifier, bits: u32) -> Result<i64> {
    if classifier.weights.iter().chain(&classifier.biases).any(|v| !v.is_finite()) {
        return Err(Error::InvalidCalibration("non-finite classifier parameter".into()));
    }
    let max_f = class_bounds(classifier).into_iter().fold(0f64, f64::max);
    s2_from_bound(max_f, bits)
}

/// Round half away from zero.
pub fn round_half_away(v: f64) -> f64 {
    v.round()
}

fn quantize_value(v: f64, scale: f64, limit: i128, what: &str) -> Result<i64> {
    let q = round_half_away(v * scale);
    if !q.is_finite() || q.abs() > limit as f64 {
        return Err(Error::QuantizationOverflow(format!("{what} {v} × {scale} out of range")));
    }
    Ok(q as i64)
}

struct PredictParams {
    weights: Vec<i64>,
    biases: Vec<i64>,
}

fn quantize_classifier(classifier: &LinearClassifier, s2: i64, limit: i128) -> Result<PredictParams> {
    let s = s2 as f64;
    let weights = classifier
        .weights
        .iter()
        .map(|&w| quantize_value(w, s, limit, "weight"))
        .collect::<Result<Vec<_>>>()?;
    let biases = classifier
        .biases
        .iter()
        .map(|&b| quantize_value(b, s * s, limit, "class bias"))
        .collect::<Result<Vec<_>>>()?;
    Ok(PredictParams { weights, biases })
}

/// Largest magnitude any partial score can reach, computed on the integer
/// parameters themselves (features lie in `[0, S2]`).
fn worst_case_score(weights: &[i64], biases: &[i64], s2: i64) -> i128 {
    let classes = biases.len();
    (0..classes)
        .map(|k| {
            let (pos, neg) = weights
                .iter()
                .skip(k)
                .step_by(classes)
                .fold((0i128, 0i128), |(p, n), &w| {
                    if w > 0 {
                        (p + w as i128, n)
                    } else {
                        (p, n - w as i128)
                    }
                });
            s2 as i128 * pos.max(neg) + (biases[k] as i128).abs()
        })
        .max()
        .unwrap_or(0)
}

/// Largest intermediate of the feature rescaling `(S2·count + C/2) / C`.
fn worst_case_feature(s2: i64, max_comparisons: u32) -> i128 {
    s2 as i128 * max_comparisons as i128 + (max_comparisons / 2) as i128
}

impl QuantizationCalibration {
    /// Runs both calibration steps for a trained model pair.
    ///
    /// `S2` is first taken from the closed form. Rounding the weights can push
    /// the worst-case score past the bound by up to `S2·T/2`, so `S2` is then
    /// lowered until the integer parameters provably fit.
    pub fn new(kernels: &KernelSet, classifier: &LinearClassifier, input_clamp: u32, bits: u32) -> Result<Self> {
        check_bits(bits)?;
        if classifier.feature_count() != kernels.feature_count() {
            return Err(Error::FeatureDimension {
                expected: kernels.feature_count(),
                found: classifier.feature_count(),
            });
        }
        let (s1, max_footprint, max_abs_bias) = calibrate_s1(kernels, input_clamp, bits)?;
        let mut s2 = calibrate_s2(classifier, bits)?;
        let limit = max_signed(bits);
        let max_c = kernels.comparison_counts.iter().copied().max().unwrap_or(1);
        loop {
            let params = quantize_classifier(classifier, s2, limit)?;
            let fits = worst_case_score(&params.weights, &params.biases, s2) <= limit
                && worst_case_feature(s2, max_c) <= limit;
            if fits {
                break;
            }
            s2 -= 1;
            if s2 < 1 {
                return Err(Error::BitWidthInsufficient { bits });
            }
        }
        Ok(Self {
            bit_width: bits,
            input_clamp,
            max_footprint,
            max_abs_bias,
            s1,
            s2,
        })
    }
}

/// Integer parameters of the full model.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedModel {
    pub kernels: KernelSet,
    /// `round(S1 · B_j)` per feature.
    pub biases_q: Vec<i64>,
    /// `round(S2 · W)`, row-major `T × K`.
    pub weights_q: Vec<i64>,
    /// `round(S2² · b)`.
    pub class_biases_q: Vec<i64>,
    pub comparison_counts: Vec<u32>,
    pub calibration: QuantizationCalibration,
    pub class_labels: Vec<String>,
}

/// Quantizes transform biases and classifier parameters.
pub fn quantize_model(
    kernels: &KernelSet,
    classifier: &LinearClassifier,
    calibration: &QuantizationCalibration,
) -> Result<QuantizedModel> {
    check_bits(calibration.bit_width)?;
    if classifier.feature_count() != kernels.feature_count() {
        return Err(Error::FeatureDimension {
            expected: kernels.feature_count(),
            found: classifier.feature_count(),
        });
    }
    let limit = max_signed(calibration.bit_width);
    let s1 = calibration.s1 as f64;
    let biases_q = kernels
        .biases
        .iter()
        .map(|&b| quantize_value(b as f64, s1, limit, "kernel bias"))
        .collect::<Result<Vec<_>>>()?;
    let input_bound =
        calibration.input_clamp as i128 * calibration.s1 as i128 * calibration.max_footprint as i128;
    if input_bound > limit {
        return Err(Error::QuantizationOverflow("S1 too large for the input clamp".into()));
    }
    let params = quantize_classifier(classifier, calibration.s2, limit)?;
    let max_c = kernels.comparison_counts.iter().copied().max().unwrap_or(1);
    if worst_case_score(&params.weights, &params.biases, calibration.s2) > limit
        || worst_case_feature(calibration.s2, max_c) > limit
    {
        return Err(Error::QuantizationOverflow("S2 too large for the classifier".into()));
    }
    Ok(QuantizedModel {
        kernels: kernels.clone(),
        biases_q,
        weights_q: params.weights,
        class_biases_q: params.biases,
        comparison_counts: kernels.comparison_counts.clone(),
        calibration: calibration.clone(),
        class_labels: classifier.class_labels.clone(),
    })
}

/// Two's-complement arithmetic at a fixed bit width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedWidth {
    bits: u32,
}

impl FixedWidth {
    pub fn new(bits: u32) -> Self {
        assert!((MIN_BIT_WIDTH..=MAX_BIT_WIDTH).contains(&bits));
        Self { bits }
    }

    #[inline]
    pub fn wrap(self, v: i64) -> i64 {
        let shift = 64 - self.bits;
        (v << shift) >> shift
    }

    #[inline]
    pub fn add(self, a: i64, b: i64) -> i64 {
        self.wrap(a.wrapping_add(b))
    }

    #[inline]
    pub fn mul(self, a: i64, b: i64) -> i64 {
        self.wrap(a.wrapping_mul(b))
    }

    /// Division of non-negative operands.
    #[inline]
    pub fn div(self, a: i64, b: i64) -> i64 {
        debug_assert!(a >= 0 && b > 0);
        self.wrap(a.wrapping_div(b))
    }
}

impl QuantizedModel {
    pub fn feature_count(&self) -> usize {
        self.biases_q.len()
    }

    pub fn class_count(&self) -> usize {
        self.class_biases_q.len()
    }

    /// Checks shapes and that every overflow bound holds for the stored
    /// integers. Used when a model comes from an untrusted source.
    pub fn validate(&self) -> Result<()> {
        let c = &self.calibration;
        check_bits(c.bit_width)?;
        let bad = |d: &str| Err(Error::InvalidCalibration(d.to_string()));
        let t = self.kernels.feature_count();
        let k = self.class_count();
        if self.biases_q.len() != t
            || self.weights_q.len() != t * k
            || k < 2
            || self.class_labels.len() != k
            || self.comparison_counts != self.kernels.comparison_counts
        {
            return bad("parameter shapes do not match");
        }
        if self.comparison_counts.contains(&0) {
            return bad("zero comparison count");
        }
        let limit = max_signed(c.bit_width);
        if c.s1 < 1 || c.s2 < 1 || c.input_clamp == 0 || c.s2 as i128 > limit {
            return bad("scale factors must be positive");
        }
        let footprint = self.kernels.structure.pairs.iter().map(|p| p.weighted_footprint()).max().unwrap_or(0);
        if c.max_footprint < footprint
            || c.input_clamp as i128 * c.s1 as i128 * c.max_footprint as i128 > limit
        {
            return bad("S1 bound violated");
        }
        let all = self.biases_q.iter().chain(&self.weights_q).chain(&self.class_biases_q);
        if all.into_iter().any(|&v| (v as i128).abs() > limit) {
            return bad("parameter exceeds bit width");
        }
        let max_c = self.comparison_counts.iter().copied().max().unwrap_or(1);
        if worst_case_score(&self.weights_q, &self.class_biases_q, c.s2) > limit
            || worst_case_feature(c.s2, max_c) > limit
        {
            return bad("S2 bound violated");
        }
        Ok(())
    }

    pub fn arith(&self) -> FixedWidth {
        FixedWidth::new(self.calibration.bit_width)
    }

    /// Worst-case gap, in float score units, between `S2²`-scaled float scores
    /// and integer scores for two classes combined, assuming both paths
    /// produce the same positive counts.
    pub fn score_slack(&self, classifier: &LinearClassifier) -> f64 {
        let k = self.class_count();
        let s2 = self.calibration.s2 as f64;
        let per_class = (0..k).map(|class| {
            let mut err = 0.5; // class bias rounding
            let mut float_mass = classifier.biases[class].abs();
            for i in 0..self.feature_count() {
                let c = self.comparison_counts[i] as f64;
                let wq = self.weights_q[i * k + class].abs() as f64;
                err += (0.5 + 0.5 / c) * wq + 0.5 * s2;
                float_mass += classifier.weight(i, class).abs();
            }
            // f32 feature rounding plus f64 accumulation in the float path
            err / (s2 * s2) + float_mass * (f32::EPSILON as f64 + 1e-12)
        });
        2.0 * per_class.fold(0f64, f64::max)
    }
}

/// Clamps to `[-I_m, I_m]`, scales by `S1` and rounds.
pub fn scale_input(window: &Window, calibration: &QuantizationCalibration) -> Vec<Vec<i64>> {
    let clamp = calibration.input_clamp as f64;
    let s1 = calibration.s1 as f64;
    window
        .samples
        .iter()
        .map(|channel| {
            channel
                .iter()
                .map(|&x| {
                    let v = if x.is_nan() { 0.0 } else { (x as f64).clamp(-clamp, clamp) };
                    round_half_away(v * s1) as i64
                })
                .collect()
        })
        .collect()
}

/// Integer convolution and comparison on already scaled input.
pub fn transform_scaled(scaled: &[Vec<i64>], qmodel: &QuantizedModel) -> Result<Vec<u32>> {
    let ks = &qmodel.kernels;
    if scaled.len() != ks.channels() {
        return Err(Error::ChannelMismatch {
            expected: ks.channels(),
            found: scaled.len(),
        });
    }
    let len = ks.window_length();
    if let Some(bad) = scaled.iter().find(|c| c.len() != len) {
        return Err(Error::LengthMismatch {
            expected: len,
            found: bad.len(),
        });
    }
    let arith = qmodel.arith();
    let patterns = build_kernels();
    let mut counts = Vec::with_capacity(qmodel.feature_count());
    let mut conv = Vec::with_capacity(len);
    for pair in &ks.structure.pairs {
        let weights = patterns[pair.kernel as usize].weights();
        let dilation = pair.dilation as usize;
        let span = (KERNEL_LENGTH - 1) * dilation;
        let (out_len, offset) = if pair.padding {
            (len, (span / 2) as isize)
        } else {
            (len - span, 0)
        };
        conv.clear();
        for p in 0..out_len {
            let mut acc = 0i64;
            for &c in &pair.channels {
                let x = &scaled[c as usize];
                for (tap, &w) in weights.iter().enumerate() {
                    let idx = p as isize + (tap * dilation) as isize - offset;
                    if idx >= 0 && (idx as usize) < len {
                        acc = arith.add(acc, arith.mul(w as i64, x[idx as usize]));
                    }
                }
            }
            conv.push(acc);
        }
        let start = pair.first_feature as usize;
        for &bias in &qmodel.biases_q[start..start + pair.feature_count as usize] {
            counts.push(conv.iter().filter(|&&v| v > bias).count() as u32);
        }
    }
    Ok(counts)
}

/// Integer transform: feature `k` is the count of positions above the
/// quantized bias, in `[0, C_k]`.
pub fn transform_q(window: &Window, qmodel: &QuantizedModel) -> Result<FeatureVector> {
    let scaled = scale_input(window, &qmodel.calibration);
    Ok(FeatureVector::Counts(transform_scaled(&scaled, qmodel)?))
}

/// Result of the integer predict step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedPrediction {
    pub class: usize,
    /// `t^q`, each in `[0, S2]`.
    pub features: Vec<i64>,
    pub scores: Vec<i64>,
}

/// Rescales counts to `t^q = (S2·count + C/2) / C` and scores them.
pub fn predict_q(counts: &[u32], qmodel: &QuantizedModel) -> Result<QuantizedPrediction> {
    if counts.len() != qmodel.feature_count() {
        return Err(Error::FeatureDimension {
            expected: qmodel.feature_count(),
            found: counts.len(),
        });
    }
    let arith = qmodel.arith();
    let s2 = qmodel.calibration.s2;
    let features: Vec<i64> = counts
        .iter()
        .zip(&qmodel.comparison_counts)
        .map(|(&n, &c)| {
            let c = c as i64;
            arith.div(arith.add(arith.mul(s2, n as i64), c / 2), c)
        })
        .collect();
    let k = qmodel.class_count();
    let mut scores = vec![0i64; k];
    for (i, &t) in features.iter().enumerate() {
        let row = &qmodel.weights_q[i * k..(i + 1) * k];
        for (s, &w) in scores.iter_mut().zip(row) {
            *s = arith.add(*s, arith.mul(t, w));
        }
    }
    for (s, &b) in scores.iter_mut().zip(&qmodel.class_biases_q) {
        *s = arith.add(*s, b);
    }
    Ok(QuantizedPrediction {
        class: argmax(&scores),
        features,
        scores,
    })
}

/// Accuracy and F1 of one inference path over the labeled windows.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathMetrics {
    pub accuracy: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Disagreement {
    pub window: usize,
    pub label: Option<u16>,
    pub float_class: usize,
    pub quant_class: usize,
    /// Float score of the float winner minus the runner-up.
    pub float_margin: f64,
    /// Integer score of the integer winner minus the runner-up.
    pub quant_margin: i64,
    /// Whether any integer count differs from the float count.
    pub counts_differ: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    pub windows: usize,
    pub agreements: usize,
    pub agreement_rate: f64,
    pub float: PathMetrics,
    pub quant: PathMetrics,
    /// Windows where at least one integer count differs from the float count.
    pub count_mismatches: usize,
    /// [`QuantizedModel::score_slack`] of the validated model.
    pub slack: f64,
    pub disagreements: Vec<Disagreement>,
}

fn top_two_margin<S: Copy + PartialOrd + std::ops::Sub<Output = S>>(scores: &[S], zero: S) -> S {
    let best = argmax(scores);
    let runner = scores
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != best)
        .map(|(_, s)| *s)
        .fold(None, |acc: Option<S>, s| match acc {
            Some(a) if a >= s => Some(a),
            _ => Some(s),
        });
    runner.map_or(zero, |r| scores[best] - r)
}

/// Runs both inference paths over `dataset` and compares decisions.
pub fn validate_pair(
    kernels: &KernelSet,
    classifier: &LinearClassifier,
    qmodel: &QuantizedModel,
    dataset: &[Window],
    positive_class: usize,
) -> Result<AgreementReport> {
    if dataset.is_empty() {
        return Err(Error::NothingToValidate);
    }
    let mut float_pred = Vec::with_capacity(dataset.len());
    let mut quant_pred = Vec::with_capacity(dataset.len());
    let mut disagreements = Vec::new();
    let mut count_mismatches = 0;
    for (i, window) in dataset.iter().enumerate() {
        let float_counts = kernels.positive_counts(window)?;
        let features = kernels.transform(window)?;
        let fp = predict_float(features.as_ppv().unwrap_or_default(), classifier)?;
        let qt = transform_q(window, qmodel)?;
        let qcounts = qt.as_counts().unwrap_or_default();
        let qp = predict_q(qcounts, qmodel)?;
        let counts_differ = qcounts != float_counts.as_slice();
        count_mismatches += usize::from(counts_differ);
        if fp.class != qp.class {
            disagreements.push(Disagreement {
                window: i,
                label: window.label,
                float_class: fp.class,
                quant_class: qp.class,
                float_margin: top_two_margin(&fp.scores, 0.0),
                quant_margin: top_two_margin(&qp.scores, 0),
                counts_differ,
            });
        }
        float_pred.push(fp.class);
        quant_pred.push(qp.class);
    }
    let labeled: Vec<(usize, usize, usize)> = dataset
        .iter()
        .zip(float_pred.iter().zip(&quant_pred))
        .filter_map(|(w, (&f, &q))| w.label.map(|l| (l as usize, f, q)))
        .collect();
    let truth: Vec<usize> = labeled.iter().map(|t| t.0).collect();
    let fl: Vec<usize> = labeled.iter().map(|t| t.1).collect();
    let ql: Vec<usize> = labeled.iter().map(|t| t.2).collect();
    let metrics = |pred: &[usize]| PathMetrics {
        accuracy: accuracy(&truth, pred),
        f1: binary_f1(&truth, pred, positive_class),
    };
    let agreements = dataset.len() - disagreements.len();
    Ok(AgreementReport {
        windows: dataset.len(),
        agreements,
        agreement_rate: agreements as f64 / dataset.len() as f64,
        float: metrics(&fl),
        quant: metrics(&ql),
        count_mismatches,
        slack: qmodel.score_slack(classifier),
        disagreements,
    })
}
