//! `RKLV` golden test vectors for validating a port of the integer path.
//!
//! ```text
//! "RKLV" | version u32 | bit_width u32 | s1 i64 | s2 i64 | input_clamp u32
//! channels u32 | window_len u32 | features u32 | classes u32 | cases u32
//! per case: byte length u32, then
//!   raw input f32 × channels × window_len (channel-major)
//!   scaled input i64 × channels × window_len
//!   counts u32 × features
//!   t^q i64 × features
//!   scores i64 × classes
//!   class u32
//! ```

use crate::error::{malformed, Error, Result};
use crate::quant::{predict_q, scale_input, transform_scaled, QuantizedModel};
use crate::transform::Window;

use super::bundle::ModelBundle;
use super::codec::{Reader, Writer};

pub const VECTORS_MAGIC: &[u8; 4] = b"RKLV";
pub const VECTORS_VERSION: u32 = 1;

const WHAT: &str = "golden vectors";

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenCase {
    pub raw: Vec<Vec<f32>>,
    pub scaled: Vec<Vec<i64>>,
    pub counts: Vec<u32>,
    pub features: Vec<i64>,
    pub scores: Vec<i64>,
    pub class: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenVectors {
    pub bit_width: u32,
    pub s1: i64,
    pub s2: i64,
    pub input_clamp: u32,
    pub channels: usize,
    pub window_len: usize,
    pub features: usize,
    pub classes: usize,
    pub cases: Vec<GoldenCase>,
}

impl GoldenVectors {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::default();
        w.bytes(VECTORS_MAGIC);
        w.u32(VECTORS_VERSION);
        w.u32(self.bit_width);
        w.i64(self.s1);
        w.i64(self.s2);
        w.u32(self.input_clamp);
        w.len_u32(self.channels)?;
        w.len_u32(self.window_len)?;
        w.len_u32(self.features)?;
        w.len_u32(self.classes)?;
        w.len_u32(self.cases.len())?;
        for case in &self.cases {
            let mut body = Writer::default();
            case.raw.iter().flatten().for_each(|&v| body.f32(v));
            case.scaled.iter().flatten().for_each(|&v| body.i64(v));
            case.counts.iter().for_each(|&v| body.u32(v));
            case.features.iter().for_each(|&v| body.i64(v));
            case.scores.iter().for_each(|&v| body.i64(v));
            body.u32(case.class);
            w.len_u32(body.buf.len())?;
            w.bytes(&body.buf);
        }
        Ok(w.buf)
    }

    fn case_len(&self) -> Option<usize> {
        let cells = self.channels.checked_mul(self.window_len)?;
        cells
            .checked_mul(12)?
            .checked_add(self.features.checked_mul(12)?)?
            .checked_add(self.classes.checked_mul(8)?)?
            .checked_add(4)
    }
}

/// Runs the integer path on every window and records each stage.
pub fn emit_golden_vectors(bundle: &ModelBundle, windows: &[Window]) -> Result<GoldenVectors> {
    let q = bundle.quantized.as_ref().ok_or(Error::NotQuantized)?;
    let c = &q.calibration;
    let cases = windows
        .iter()
        .map(|w| {
            let scaled = scale_input(w, c);
            let counts = transform_scaled(&scaled, q)?;
            let p = predict_q(&counts, q)?;
            Ok(GoldenCase {
                raw: w.samples.clone(),
                scaled,
                counts,
                features: p.features,
                scores: p.scores,
                class: p.class as u32,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GoldenVectors {
        bit_width: c.bit_width,
        s1: c.s1,
        s2: c.s2,
        input_clamp: c.input_clamp,
        channels: q.kernels.channels(),
        window_len: q.kernels.window_length(),
        features: q.feature_count(),
        classes: q.class_count(),
        cases,
    })
}

pub fn decode_vectors(data: &[u8]) -> Result<GoldenVectors> {
    let mut r = Reader::new(data, WHAT, |d| Error::Malformed {
        what: WHAT,
        detail: d,
    });
    if r.take(4)? != VECTORS_MAGIC {
        return Err(r.fail("bad magic"));
    }
    let version = r.u32()?;
    if version != VECTORS_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: VECTORS_VERSION,
        });
    }
    let mut v = GoldenVectors {
        bit_width: r.u32()?,
        s1: r.i64()?,
        s2: r.i64()?,
        input_clamp: r.u32()?,
        channels: r.u32()? as usize,
        window_len: r.u32()? as usize,
        features: r.u32()? as usize,
        classes: r.u32()? as usize,
        cases: Vec::new(),
    };
    let expected = v.case_len().ok_or_else(|| r.fail("shape overflow"))?;
    let n = r.count(expected.saturating_add(4))?;
    for i in 0..n {
        let len = r.u32()? as usize;
        if len != expected {
            return Err(r.fail(format!("case {i}: length {len}, expected {expected}")));
        }
        let (ch, wl) = (v.channels, v.window_len);
        let raw = (0..ch).map(|_| r.vec(wl, 4, |r| r.f32())).collect::<Result<_>>()?;
        let scaled = (0..ch).map(|_| r.vec(wl, 8, |r| r.i64())).collect::<Result<_>>()?;
        v.cases.push(GoldenCase {
            raw,
            scaled,
            counts: r.vec(v.features, 4, |r| r.u32())?,
            features: r.vec(v.features, 8, |r| r.i64())?,
            scores: r.vec(v.classes, 8, |r| r.i64())?,
            class: r.u32()?,
        });
    }
    if !r.is_empty() {
        return Err(r.fail("trailing bytes"));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub cases: usize,
    pub exact: usize,
    /// Indices of cases where any recorded stage differs.
    pub mismatches: Vec<usize>,
}

/// Recomputes every case from its raw input and compares all stages.
pub fn replay_vectors(vectors: &GoldenVectors, q: &QuantizedModel) -> Result<ReplayReport> {
    let c = &q.calibration;
    let header = (c.bit_width, c.s1, c.s2, c.input_clamp, q.kernels.channels(), q.kernels.window_length());
    let recorded = (
        vectors.bit_width,
        vectors.s1,
        vectors.s2,
        vectors.input_clamp,
        vectors.channels,
        vectors.window_len,
    );
    if header != recorded || vectors.features != q.feature_count() || vectors.classes != q.class_count() {
        return Err(malformed(WHAT, "vectors were produced by a different model"));
    }
    let mut mismatches = Vec::new();
    for (i, case) in vectors.cases.iter().enumerate() {
        let window = Window::new(case.raw.clone(), 0.0);
        let scaled = scale_input(&window, c);
        let counts = transform_scaled(&scaled, q)?;
        let p = predict_q(&counts, q)?;
        let same = scaled == case.scaled
            && counts == case.counts
            && p.features == case.features
            && p.scores == case.scores
            && p.class as u32 == case.class;
        if !same {
            mismatches.push(i);
        }
    }
    Ok(ReplayReport {
        cases: vectors.cases.len(),
        exact: vectors.cases.len() - mismatches.len(),
        mismatches,
    })
}
