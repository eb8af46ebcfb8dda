//! Windowing, class balancing, brand-held-out splits and the binary window
//! archive.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{class_name, Recording, CLASS_NAMES};
use crate::error::{malformed, Error, Result};
use crate::transform::{Window, KERNEL_LENGTH};

/// A pure-label, non-overlapping window position inside a recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    /// Index into the recording slice.
    pub recording: usize,
    pub start: usize,
    pub label: u16,
}

/// Non-overlapping windows whose samples all carry the same label.
pub fn candidate_windows(recordings: &[Recording], window_len: usize) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (ri, rec) in recordings.iter().enumerate() {
        if window_len == 0 {
            break;
        }
        for start in (0..rec.len() / window_len).map(|i| i * window_len) {
            let labels = &rec.labels[start..start + window_len];
            if labels.iter().all(|&l| l == labels[0]) {
                out.push(Candidate {
                    recording: ri,
                    start,
                    label: labels[0],
                });
            }
        }
    }
    out
}

fn cut(recordings: &[Recording], c: &Candidate, window_len: usize) -> Window {
    let rec = &recordings[c.recording];
    Window {
        samples: rec
            .samples
            .iter()
            .map(|ch| ch[c.start..c.start + window_len].to_vec())
            .collect(),
        sample_rate: rec.rate_hz as f32,
        label: Some(c.label),
        recording: Some(rec.id),
    }
}

/// Draws balanced, disjoint train and validation windows.
///
/// Each set holds exactly `count / classes` windows of every class. Windows
/// are shuffled per class with a seeded generator and returned in draw order.
pub fn window_dataset(
    recordings: &[Recording],
    window_len: usize,
    train_count: usize,
    val_count: usize,
    seed: u64,
) -> Result<(Vec<Window>, Vec<Window>)> {
    if window_len < KERNEL_LENGTH {
        return Err(Error::WindowTooShort {
            length: window_len,
            min: KERNEL_LENGTH,
        });
    }
    let classes = CLASS_NAMES.len();
    if !train_count.is_multiple_of(classes) || !val_count.is_multiple_of(classes) {
        return Err(Error::Config(format!(
            "window counts must be divisible by the class count ({classes})"
        )));
    }
    let candidates = candidate_windows(recordings, window_len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (train_per, val_per) = (train_count / classes, val_count / classes);
    let mut train = Vec::with_capacity(train_count);
    let mut val = Vec::with_capacity(val_count);
    for class in 0..classes as u16 {
        let mut pool: Vec<&Candidate> = candidates.iter().filter(|c| c.label == class).collect();
        if pool.len() < train_per + val_per {
            return Err(Error::CannotBalance(class_name(class).to_string()));
        }
        let (picked, _) = pool.partial_shuffle(&mut rng, train_per + val_per);
        train.extend(picked[..train_per].iter().map(|c| cut(recordings, c, window_len)));
        val.extend(picked[train_per..].iter().map(|c| cut(recordings, c, window_len)));
    }
    Ok((train, val))
}

/// How to cut a corpus into train, validation and test windows.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub window_len: usize,
    pub train_count: usize,
    pub val_count: usize,
    /// Upper bound on test windows, sampled with the same seed. `None` keeps all.
    pub test_limit: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<Window>,
    pub validation: Vec<Window>,
    pub test: Vec<Window>,
    pub policy: String,
    pub warnings: Vec<String>,
}

/// Trains and validates on one brand and tests on every other brand.
///
/// Test windows are all pure windows of the held-out brands (optionally
/// subsampled), so no recording contributes to both sides.
pub fn split_by_brand(recordings: &[Recording], train_brand: &str, spec: &SplitSpec) -> Result<DatasetSplit> {
    let (own, other): (Vec<Recording>, Vec<Recording>) = recordings
        .iter()
        .cloned()
        .partition(|r| r.meta.brand == train_brand);
    if own.is_empty() {
        return Err(Error::BrandNotFound(train_brand.to_string()));
    }
    let (train, validation) = window_dataset(&own, spec.window_len, spec.train_count, spec.val_count, spec.seed)?;
    let mut test_candidates = candidate_windows(&other, spec.window_len);
    if let Some(limit) = spec.test_limit {
        if test_candidates.len() > limit {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(2);
            test_candidates.shuffle(&mut rng);
            test_candidates.truncate(limit);
            test_candidates.sort_by_key(|c| (c.recording, c.start));
        }
    }
    let test: Vec<Window> = test_candidates
        .iter()
        .map(|c| cut(&other, c, spec.window_len))
        .collect();
    let mut warnings = Vec::new();
    if other.is_empty() {
        warnings.push(format!("corpus holds only brand {train_brand}; test set is empty"));
    }
    Ok(DatasetSplit {
        train,
        validation,
        test,
        policy: format!("brand-held-out: train on {train_brand}"),
        warnings,
    })
}

pub const WINDOW_ARCHIVE_MAGIC: &[u8; 4] = b"RKLW";
pub const WINDOW_ARCHIVE_VERSION: u32 = 1;
/// Label value stored for unlabeled windows.
const NO_LABEL: u16 = u16::MAX;

/// Decoded window archive. Sample rates are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowArchive {
    pub window_len: usize,
    pub channels: usize,
    pub windows: Vec<Window>,
}

/// Little-endian layout: magic, version, window_len, channels, count (u32
/// each), every window's f32 samples channel-major, then one u16 label per
/// window.
pub fn encode_window_archive(windows: &[Window]) -> Result<Vec<u8>> {
    let (len, channels) = windows.first().map_or((0, 0), |w| (w.len(), w.channels()));
    if windows
        .iter()
        .any(|w| w.len() != len || w.channels() != channels || w.samples.iter().any(|c| c.len() != len))
    {
        return Err(Error::InvalidWindow("archive windows must share one shape".into()));
    }
    let as_u32 = |v: usize| u32::try_from(v).map_err(|_| Error::InvalidWindow("archive too large".into()));
    let mut out = Vec::with_capacity(20 + windows.len() * (len * channels * 4 + 2));
    out.extend_from_slice(WINDOW_ARCHIVE_MAGIC);
    out.extend_from_slice(&WINDOW_ARCHIVE_VERSION.to_le_bytes());
    out.extend_from_slice(&as_u32(len)?.to_le_bytes());
    out.extend_from_slice(&as_u32(channels)?.to_le_bytes());
    out.extend_from_slice(&as_u32(windows.len())?.to_le_bytes());
    for w in windows {
        for v in w.samples.iter().flatten() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    for w in windows {
        out.extend_from_slice(&w.label.unwrap_or(NO_LABEL).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_window_archive(bytes: &[u8]) -> Result<WindowArchive> {
    const WHAT: &str = "window archive";
    if bytes.len() < 20 || &bytes[..4] != WINDOW_ARCHIVE_MAGIC {
        return Err(malformed(WHAT, "bad magic or truncated header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != WINDOW_ARCHIVE_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: WINDOW_ARCHIVE_VERSION,
        });
    }
    let (len, channels, count) = (word(8) as usize, word(12) as usize, word(16) as usize);
    let per_window = len
        .checked_mul(channels)
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| malformed(WHAT, "shape overflow"))?;
    let expected = per_window
        .checked_add(2)
        .and_then(|v| v.checked_mul(count))
        .and_then(|v| v.checked_add(20))
        .ok_or_else(|| malformed(WHAT, "size overflow"))?;
    if bytes.len() != expected {
        return Err(malformed(WHAT, format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let body = &bytes[20..];
    let labels = &body[per_window * count..];
    let windows = (0..count)
        .map(|i| {
            let raw = &body[i * per_window..(i + 1) * per_window];
            let mut values = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()));
            let samples = (0..channels).map(|_| values.by_ref().take(len).collect()).collect();
            let label = u16::from_le_bytes([labels[2 * i], labels[2 * i + 1]]);
            Window {
                samples,
                sample_rate: 0.0,
                label: (label != NO_LABEL).then_some(label),
                recording: None,
            }
        })
        .collect();
    Ok(WindowArchive {
        window_len: len,
        channels,
        windows,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::recording;
    use super::super::{TRANSPORT, USAGE};
    use super::*;

    fn labeled(n: usize, period: usize) -> Recording {
        let labels = (0..n).map(|i| ((i / period) % 2) as u16).collect();
        recording(vec![(0..n).map(|i| i as f32).collect()], labels, 200.0)
    }

    #[test]
    fn mixed_windows_are_dropped() {
        let r = labeled(800, 40);
        assert!(candidate_windows(std::slice::from_ref(&r), 80).is_empty());
        assert_eq!(
            window_dataset(&[r], 80, 2, 0, 0),
            Err(Error::CannotBalance("transport".into()))
        );
    }

    #[test]
    fn balanced_and_deterministic() {
        let r = labeled(80 * 200, 800);
        let (train, val) = window_dataset(std::slice::from_ref(&r), 80, 40, 20, 5).unwrap();
        assert_eq!(train.len(), 40);
        assert_eq!(val.len(), 20);
        for set in [&train, &val] {
            let usage = set.iter().filter(|w| w.label == Some(USAGE)).count();
            assert_eq!(usage * 2, set.len());
            for w in set.iter() {
                let start = w.samples[0][0] as usize;
                assert!(r.labels[start..start + 80].iter().all(|&l| Some(l) == w.label));
            }
        }
        let starts = |s: &[Window]| s.iter().map(|w| w.samples[0][0] as usize).collect::<Vec<_>>();
        let mut all = starts(&train);
        all.extend(starts(&val));
        let n = all.len();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), n, "train and validation overlap");
        let (train2, _) = window_dataset(&[r], 80, 40, 20, 5).unwrap();
        assert_eq!(starts(&train), starts(&train2));
        let _ = TRANSPORT;
    }

    #[test]
    fn brand_split() {
        let mut recs = Vec::new();
        for (i, brand) in ["A", "B", "C"].iter().enumerate() {
            let mut r = labeled(80 * 40, 400);
            r.id = i as u32;
            r.meta.brand = brand.to_string();
            recs.push(r);
        }
        let spec = SplitSpec {
            window_len: 80,
            train_count: 10,
            val_count: 4,
            test_limit: None,
            seed: 1,
        };
        let split = split_by_brand(&recs, "B", &spec).unwrap();
        assert!(split.train.iter().chain(&split.validation).all(|w| w.recording == Some(1)));
        assert!(split.test.iter().all(|w| w.recording != Some(1)));
        assert_eq!(split.test.len(), 80);
        assert!(split.warnings.is_empty());
        assert_eq!(
            split_by_brand(&recs, "Z", &spec),
            Err(Error::BrandNotFound("Z".into()))
        );
        let only = split_by_brand(&recs[..1], "A", &spec).unwrap();
        assert!(only.test.is_empty());
        assert_eq!(only.warnings.len(), 1);
        let capped = split_by_brand(&recs, "B", &SplitSpec { test_limit: Some(7), ..spec }).unwrap();
        assert_eq!(capped.test.len(), 7);
    }

    #[test]
    fn archive_round_trip_and_rejects() {
        let w = vec![
            Window::new(vec![vec![1.0, -2.5, 3.0], vec![0.0, 0.5, 9.0]], 200.0).with_label(1),
            Window::new(vec![vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]], 200.0),
        ];
        let bytes = encode_window_archive(&w).unwrap();
        assert_eq!(bytes.len(), 20 + 2 * (6 * 4 + 2));
        let back = decode_window_archive(&bytes).unwrap();
        assert_eq!(back.window_len, 3);
        assert_eq!(back.channels, 2);
        assert_eq!(back.windows[0].samples, w[0].samples);
        assert_eq!(back.windows[0].label, Some(1));
        assert_eq!(back.windows[1].label, None);
        assert!(decode_window_archive(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_window_archive(&bad).is_err());
        let mut future = bytes;
        future[4] = 9;
        assert!(matches!(decode_window_archive(&future), Err(Error::UnsupportedVersion { .. })));
    }
}
