//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rocketlite::quant::{quantize_model, QuantizationCalibration, QuantizedModel};
use rocketlite::ridge::{train_ridge, LinearClassifier, DEFAULT_LAMBDA_GRID};
use rocketlite::transform::{KernelSet, Window};

/// Tap triples in lexicographic order, enumerated independently of the
/// library.
pub fn oracle_triples() -> Vec<[usize; 3]> {
    let mut v = Vec::new();
    for a in 0..9 {
        for b in 0..9 {
            for c in 0..9 {
                if a < b && b < c {
                    v.push([a, b, c]);
                }
            }
        }
    }
    v
}

fn oracle_weight(triple: &[usize; 3], tap: usize) -> i64 {
    if triple.contains(&tap) {
        2
    } else {
        -1
    }
}

/// Direct convolution and counting, straight from the definition.
/// Summation is channel-major then tap, matching the library, so results
/// must agree bit for bit.
pub fn naive_counts(window: &Window, kernels: &KernelSet) -> Vec<u32> {
    let triples = oracle_triples();
    let len = window.samples[0].len() as i64;
    let mut out = Vec::new();
    for pair in &kernels.structure.pairs {
        let d = pair.dilation as i64;
        let triple = &triples[pair.kernel as usize];
        let (first, last) = if pair.padding { (0, len) } else { (0, len - 8 * d) };
        let shift = if pair.padding { 4 * d } else { 0 };
        let mut conv = Vec::new();
        for p in first..last {
            let mut acc = 0f32;
            for &c in &pair.channels {
                for tap in 0..9 {
                    let i = p - shift + tap as i64 * d;
                    if i >= 0 && i < len {
                        acc += oracle_weight(triple, tap) as f32 * window.samples[c as usize][i as usize];
                    }
                }
            }
            conv.push(acc);
        }
        for f in 0..pair.feature_count {
            let bias = kernels.biases[(pair.first_feature + f) as usize];
            out.push(conv.iter().filter(|&&v| v > bias).count() as u32);
        }
    }
    out
}

/// Everything the 128-bit widened integer path computes, plus the largest
/// intermediate magnitude it saw.
#[derive(Debug, Clone, PartialEq)]
pub struct WideRun {
    pub scaled: Vec<Vec<i128>>,
    pub counts: Vec<u32>,
    pub features: Vec<i128>,
    pub scores: Vec<i128>,
    pub class: usize,
    pub max_abs: i128,
}

/// Integer inference in i128 with no wrapping, tracking every intermediate.
pub fn widened_run(window: &Window, q: &QuantizedModel) -> WideRun {
    let c = &q.calibration;
    let clamp = c.input_clamp as f64;
    let mut max_abs = 0i128;
    let mut see = |v: i128| {
        max_abs = max_abs.max(v.abs());
        v
    };
    let scaled: Vec<Vec<i128>> = window
        .samples
        .iter()
        .map(|ch| {
            ch.iter()
                .map(|&x| {
                    let v = if x.is_nan() { 0.0 } else { (x as f64).clamp(-clamp, clamp) };
                    see((v * c.s1 as f64).round() as i128)
                })
                .collect()
        })
        .collect();
    let triples = oracle_triples();
    let len = scaled[0].len() as i128;
    let mut counts = Vec::new();
    for pair in &q.kernels.structure.pairs {
        let d = pair.dilation as i128;
        let triple = &triples[pair.kernel as usize];
        let (last, shift) = if pair.padding { (len, 4 * d) } else { (len - 8 * d, 0) };
        let mut conv = Vec::new();
        for p in 0..last {
            let mut acc = 0i128;
            for &ch in &pair.channels {
                for tap in 0..9 {
                    let i = p - shift + tap as i128 * d;
                    if i >= 0 && i < len {
                        let prod = see(oracle_weight(triple, tap) as i128 * scaled[ch as usize][i as usize]);
                        acc = see(acc + prod);
                    }
                }
            }
            conv.push(acc);
        }
        for f in 0..pair.feature_count {
            let bias = q.biases_q[(pair.first_feature + f) as usize] as i128;
            see(bias);
            counts.push(conv.iter().filter(|&&v| v > bias).count() as u32);
        }
    }
    let (features, scores, class, predict_max) = widened_predict(&counts, q);
    max_abs = max_abs.max(predict_max);
    WideRun {
        scaled,
        counts,
        features,
        scores,
        class,
        max_abs,
    }
}

/// Integer predict step in i128: `(features, scores, class, max |intermediate|)`.
pub fn widened_predict(counts: &[u32], q: &QuantizedModel) -> (Vec<i128>, Vec<i128>, usize, i128) {
    let mut max_abs = 0i128;
    let mut see = |v: i128| {
        max_abs = max_abs.max(v.abs());
        v
    };
    let s2 = q.calibration.s2 as i128;
    let features: Vec<i128> = counts
        .iter()
        .zip(&q.comparison_counts)
        .map(|(&n, &ck)| {
            let ck = ck as i128;
            let prod = see(s2 * n as i128);
            let num = see(prod + ck / 2);
            num / ck
        })
        .collect();
    let k = q.class_count();
    let mut scores = vec![0i128; k];
    for (i, &t) in features.iter().enumerate() {
        for (class, s) in scores.iter_mut().enumerate() {
            let prod = see(t * q.weights_q[i * k + class] as i128);
            *s = see(*s + prod);
        }
    }
    for (s, &b) in scores.iter_mut().zip(&q.class_biases_q) {
        *s = see(*s + b as i128);
        see(b as i128);
    }
    let mut class = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[class] {
            class = i;
        }
    }
    (features, scores, class, max_abs)
}

/// Labeled univariate windows: class 0 is slow sway, class 1 adds a fast
/// vibration. Amplitudes span a few thousand milli-G.
pub fn toy_windows(rng: &mut impl Rng, n: usize, len: usize) -> Vec<Window> {
    (0..n)
        .map(|i| {
            let label = (i % 2) as u16;
            let slow = rng.gen_range(0.02..0.08);
            let fast = rng.gen_range(0.2..0.45);
            let amp = rng.gen_range(200.0..3000.0);
            let phase = rng.gen_range(0.0..6.3);
            let samples = (0..len)
                .map(|t| {
                    let t = t as f64;
                    let mut v = 1000.0 + amp * (slow * t * std::f64::consts::TAU + phase).sin();
                    if label == 1 {
                        v += 0.4 * amp * (fast * t * std::f64::consts::TAU).sin();
                    }
                    (v + rng.gen_range(-150.0..150.0)) as f32
                })
                .collect();
            Window::univariate(samples, 200.0).with_label(label)
        })
        .collect()
}

/// A small trained float model and its quantized counterpart.
pub struct Toy {
    pub kernels: KernelSet,
    pub classifier: LinearClassifier,
    pub quantized: QuantizedModel,
    pub test: Vec<Window>,
}

pub fn toy_model(len: usize, feature_count: usize, seed: u64, clamp: u32, bits: u32) -> Toy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train = toy_windows(&mut rng, 200, len);
    let test = toy_windows(&mut rng, 200, len);
    let kernels = KernelSet::fit(&train, feature_count, seed).unwrap();
    let feats: Vec<Vec<f32>> = train
        .iter()
        .map(|w| kernels.transform(w).unwrap().as_ppv().unwrap().to_vec())
        .collect();
    let labels: Vec<usize> = train.iter().map(|w| w.label.unwrap() as usize).collect();
    let names = vec!["transport".to_string(), "usage".to_string()];
    let classifier = train_ridge(&feats, &labels, &names, &DEFAULT_LAMBDA_GRID).unwrap();
    let cal = QuantizationCalibration::new(&kernels, &classifier, clamp, bits).unwrap();
    let quantized = quantize_model(&kernels, &classifier, &cal).unwrap();
    Toy {
        kernels,
        classifier,
        quantized,
        test,
    }
}

/// Integer square root by bisection.
pub fn isqrt(n: u128) -> u128 {
    let (mut lo, mut hi) = (0u128, 1u128 << 64);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if mid * mid <= n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Single-bin DFT magnitude, scaled so a sinusoid of amplitude A reads A.
pub fn tone_amplitude(x: &[f32], rate: f64, freq: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (n, &v) in x.iter().enumerate() {
        let a = 2.0 * std::f64::consts::PI * freq * n as f64 / rate;
        re += v as f64 * a.cos();
        im -= v as f64 * a.sin();
    }
    2.0 * (re * re + im * im).sqrt() / x.len() as f64
}

/// Share of the mean-removed energy of `x` at frequencies in `[lo, hi)` Hz,
/// from DFTs of consecutive one-second blocks (partial tail dropped).
pub fn band_energy(x: &[f32], rate: usize) -> impl Fn(f64, f64) -> (f64, f64) + '_ {
    move |lo: f64, hi: f64| {
        let mut band = 0.0;
        let mut total = 0.0;
        for block in x.chunks_exact(rate) {
            let mean = block.iter().map(|&v| v as f64).sum::<f64>() / rate as f64;
            let c: Vec<f64> = block.iter().map(|&v| v as f64 - mean).collect();
            total += c.iter().map(|v| v * v).sum::<f64>();
            // one-second blocks: bin k is k Hz
            for k in lo.ceil() as usize..hi.ceil() as usize {
                let (mut re, mut im) = (0.0, 0.0);
                for (n, v) in c.iter().enumerate() {
                    let a = -2.0 * std::f64::consts::PI * ((k * n) % rate) as f64 / rate as f64;
                    re += v * a.cos();
                    im += v * a.sin();
                }
                let fold = if k == 0 || 2 * k == rate { 1.0 } else { 2.0 };
                band += fold * (re * re + im * im) / rate as f64;
            }
        }
        (band, total)
    }
}
