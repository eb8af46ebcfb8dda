use std::f64::consts::PI;

use super::Recording;
use crate::error::{Error, Result};

/// Tap count of [`design_fir_lowpass`] when the caller has no preference.
pub const DEFAULT_TAPS: usize = 101;

/// Cutoff as a fraction of the target rate.
const CUTOFF_FRACTION: f64 = 0.45;
/// Upper bound on the interpolation factor of a rational resample.
const MAX_INTERPOLATION: u64 = 64;

/// Windowed-sinc (Hamming) low-pass at `0.45 · target_rate`, normalized to
/// unit DC gain. Rates are in Hz.
pub fn design_fir_lowpass(target_rate: f64, source_rate: f64, taps: usize) -> Result<Vec<f64>> {
    if !(target_rate > 0.0 && source_rate > 0.0) {
        return Err(Error::InvalidFilter("rates must be positive".into()));
    }
    if target_rate >= source_rate {
        return Err(Error::Upsampling {
            source_rate,
            target_rate,
        });
    }
    if taps < 11 || taps.is_multiple_of(2) {
        return Err(Error::InvalidFilter(format!("taps must be odd and >= 11, got {taps}")));
    }
    Ok(windowed_sinc(CUTOFF_FRACTION * target_rate / source_rate, taps))
}

/// `cutoff` in cycles per sample.
fn windowed_sinc(cutoff: f64, taps: usize) -> Vec<f64> {
    let center = (taps - 1) as f64 / 2.0;
    let mut h: Vec<f64> = (0..taps)
        .map(|n| {
            let m = n as f64 - center;
            let sinc = if m == 0.0 {
                2.0 * cutoff
            } else {
                (2.0 * PI * cutoff * m).sin() / (PI * m)
            };
            let window = 0.54 - 0.46 * (2.0 * PI * n as f64 / (taps - 1) as f64).cos();
            sinc * window
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Reduces `target / source` to `(up, down)`. Rates are resolved to 1 mHz.
pub fn rate_ratio(source_rate: f64, target_rate: f64) -> Result<(u64, u64)> {
    let unsupported = || Error::UnsupportedRatePair {
        source_rate,
        target_rate,
    };
    let to_mhz = |r: f64| -> Option<u64> {
        let v = r * 1000.0;
        (r > 0.0 && v.is_finite() && (v - v.round()).abs() < 1e-6 && v.round() >= 1.0).then(|| v.round() as u64)
    };
    let s = to_mhz(source_rate).ok_or_else(unsupported)?;
    let t = to_mhz(target_rate).ok_or_else(unsupported)?;
    let g = gcd(s, t);
    let (up, down) = (t / g, s / g);
    if up > MAX_INTERPOLATION {
        return Err(unsupported());
    }
    Ok((up, down))
}

/// Taps that keep tones up to `0.4 · target` within 1% while the stop band
/// begins at the target Nyquist rate.
pub fn default_resample_taps(source_rate: f64, target_rate: f64) -> usize {
    // Hamming transition width ≈ 3.3·fs/N; it must fit in 0.1·target
    let n = (33.0 * source_rate / target_rate).ceil() as usize;
    let n = n.max(DEFAULT_TAPS);
    n | 1
}

/// Anti-aliased rational resampling with [`default_resample_taps`].
pub fn resample(recording: &Recording, target_rate: f64) -> Result<Recording> {
    let taps = default_resample_taps(recording.rate_hz, target_rate);
    resample_with_taps(recording, target_rate, taps)
}

/// Polyphase rational resampling (downsampling only). `taps` is the filter
/// length at the source rate; labels follow the nearest source timestamp.
pub fn resample_with_taps(recording: &Recording, target_rate: f64, taps: usize) -> Result<Recording> {
    recording.validate()?;
    let source_rate = recording.rate_hz;
    let (up, down) = rate_ratio(source_rate, target_rate)?;
    if up == down {
        return Ok(recording.clone());
    }
    if up > down {
        return Err(Error::Upsampling {
            source_rate,
            target_rate,
        });
    }
    if taps < 11 || taps.is_multiple_of(2) {
        return Err(Error::InvalidFilter(format!("taps must be odd and >= 11, got {taps}")));
    }
    let up_rate = source_rate * up as f64;
    let filter_len = (taps - 1) * up as usize + 1;
    let h = windowed_sinc(CUTOFF_FRACTION * target_rate / up_rate, filter_len);
    let delay = (filter_len - 1) / 2;
    let n_in = recording.len();
    let n_out = ((n_in as u128 * up as u128).div_ceil(down as u128)) as usize;
    let (up, down) = (up as usize, down as usize);
    let gain = up as f64;

    let samples = recording
        .samples
        .iter()
        .map(|x| {
            (0..n_out)
                .map(|n| {
                    // y[n] = L · Σ_j h[n·M − j·L + D] · x[j]
                    let center = n * down + delay;
                    let j_max = (center / up).min(n_in.saturating_sub(1));
                    let j_min = center.saturating_sub(filter_len - 1).div_ceil(up);
                    let mut acc = 0f64;
                    if j_min <= j_max {
                        for j in j_min..=j_max {
                            acc += h[center - j * up] * x[j] as f64;
                        }
                    }
                    (gain * acc) as f32
                })
                .collect()
        })
        .collect();
    let labels = (0..n_out)
        .map(|n| {
            let src = ((n * down) as f64 / up as f64).round() as usize;
            recording.labels[src.min(n_in - 1)]
        })
        .collect();
    Ok(Recording {
        id: recording.id,
        samples,
        labels,
        rate_hz: target_rate,
        meta: recording.meta.clone(),
    })
}
