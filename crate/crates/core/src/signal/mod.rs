//! Accelerometer recordings and the preprocessing that turns them into
//! classifier windows.

mod dataset;
mod fir;
mod ingest;
pub mod synth;

pub use dataset::{
    candidate_windows, decode_window_archive, encode_window_archive, split_by_brand, window_dataset,
    Candidate, DatasetSplit, SplitSpec, WindowArchive, WINDOW_ARCHIVE_MAGIC, WINDOW_ARCHIVE_VERSION,
};
pub use fir::{default_resample_taps, design_fir_lowpass, rate_ratio, resample, resample_with_taps, DEFAULT_TAPS};
pub use ingest::{parse_recording_csv, parse_sidecar, write_recording_csv, CsvSample};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class index of the "Transportation" class.
pub const TRANSPORT: u16 = 0;
/// Class index of the "Usage" class.
pub const USAGE: u16 = 1;
pub const CLASS_NAMES: [&str; 2] = ["transport", "usage"];

pub fn class_name(label: u16) -> &'static str {
    CLASS_NAMES.get(label as usize).copied().unwrap_or("unknown")
}

/// Parses a class given as an index or a name.
pub fn parse_class(text: &str) -> Option<u16> {
    let text = text.trim();
    if let Ok(v) = text.parse::<u16>() {
        return ((v as usize) < CLASS_NAMES.len()).then_some(v);
    }
    CLASS_NAMES
        .iter()
        .position(|n| n.eq_ignore_ascii_case(text))
        .map(|i| i as u16)
}

/// Sidecar metadata of one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingMeta {
    pub brand: String,
    pub family: String,
    pub activity: String,
    pub source_rate_hz: f64,
}

/// A labeled multichannel recording at a uniform sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub id: u32,
    /// `samples[channel][n]`, milli-G.
    pub samples: Vec<Vec<f32>>,
    /// Class index per sample.
    pub labels: Vec<u16>,
    pub rate_hz: f64,
    pub meta: RecordingMeta,
}

impl Recording {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.samples.len()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.rate_hz
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate_hz > 0.0) || !self.rate_hz.is_finite() {
            return Err(Error::InvalidWindow(format!("recording {}: bad rate", self.id)));
        }
        if self.samples.iter().any(|c| c.len() != self.labels.len()) {
            return Err(Error::InvalidWindow(format!(
                "recording {}: label count does not match samples",
                self.id
            )));
        }
        Ok(())
    }
}

/// Collapses three axes into `|x| + |y| + |z|`.
pub fn l1_norm(recording: &Recording) -> Result<Recording> {
    if recording.channels() != 3 {
        return Err(Error::ExpectedTriAxial(recording.channels()));
    }
    let [x, y, z] = [&recording.samples[0], &recording.samples[1], &recording.samples[2]];
    let fused = x
        .iter()
        .zip(y)
        .zip(z)
        .map(|((a, b), c)| a.abs() + b.abs() + c.abs())
        .collect();
    Ok(Recording {
        samples: vec![fused],
        ..recording.clone_without_samples()
    })
}

impl Recording {
    fn clone_without_samples(&self) -> Recording {
        Recording {
            id: self.id,
            samples: Vec::new(),
            labels: self.labels.clone(),
            rate_hz: self.rate_hz,
            meta: self.meta.clone(),
        }
    }
}
