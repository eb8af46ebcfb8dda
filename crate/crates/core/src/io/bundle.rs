//! `RKLM` model bundle.
//!
//! ```text
//! "RKLM" | version u32 | section count u32
//! section table: { tag [4]u8, offset u64, length u64 } × count
//! section payloads
//! CRC-64/XZ of every preceding byte, u64
//! ```
//!
//! Sections: `KERN` kernel set, `CLSF` float classifier, `QNTZ` quantized
//! model (optional), `CONF` 32-byte digest of the training configuration.
//! All integers are little-endian.

use std::path::Path;

use crc::{Crc, CRC_64_XZ};

use super::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::quant::{QuantizationCalibration, QuantizedModel};
use crate::ridge::LinearClassifier;
use crate::transform::{plan_dilations, KernelDilation, KernelSet, KernelStructure, NUM_KERNELS};

pub const BUNDLE_MAGIC: &[u8; 4] = b"RKLM";
pub const BUNDLE_VERSION: u32 = 1;

const TAG_KERNELS: [u8; 4] = *b"KERN";
const TAG_CLASSIFIER: [u8; 4] = *b"CLSF";
const TAG_QUANTIZED: [u8; 4] = *b"QNTZ";
const TAG_CONFIG: [u8; 4] = *b"CONF";

const MAX_WINDOW_LENGTH: usize = 1 << 20;
const MAX_CHANNELS: usize = 1024;

const CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

pub fn crc64(data: &[u8]) -> u64 {
    CRC64.checksum(data)
}

/// Everything needed to run and reproduce a trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub kernels: KernelSet,
    pub classifier: LinearClassifier,
    pub quantized: Option<QuantizedModel>,
    /// SHA-256 of the training configuration text.
    pub config_digest: [u8; 32],
}

impl ModelBundle {
    pub fn new(kernels: KernelSet, classifier: LinearClassifier, config_digest: [u8; 32]) -> Self {
        Self {
            kernels,
            classifier,
            quantized: None,
            config_digest,
        }
    }

    pub fn calibration(&self) -> Option<&QuantizationCalibration> {
        self.quantized.as_ref().map(|q| &q.calibration)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut sections: Vec<([u8; 4], Vec<u8>)> = vec![
            (TAG_KERNELS, encode_kernels(&self.kernels)?),
            (TAG_CLASSIFIER, encode_classifier(&self.classifier)?),
        ];
        if let Some(q) = &self.quantized {
            sections.push((TAG_QUANTIZED, encode_quantized(q)?));
        }
        sections.push((TAG_CONFIG, self.config_digest.to_vec()));

        let mut w = Writer::default();
        w.bytes(BUNDLE_MAGIC);
        w.u32(BUNDLE_VERSION);
        w.len_u32(sections.len())?;
        let mut offset = (12 + sections.len() * 20) as u64;
        for (tag, body) in &sections {
            w.bytes(tag);
            w.u64(offset);
            w.u64(body.len() as u64);
            offset += body.len() as u64;
        }
        for (_, body) in &sections {
            w.bytes(body);
        }
        let digest = crc64(&w.buf);
        w.u64(digest);
        Ok(w.buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |d: &str| Error::BundleCorrupt(d.to_string());
        if bytes.len() < 20 || &bytes[..4] != BUNDLE_MAGIC {
            return Err(corrupt("bad magic or truncated"));
        }
        let (content, tail) = bytes.split_at(bytes.len() - 8);
        if crc64(content) != u64::from_le_bytes(tail.try_into().unwrap()) {
            return Err(corrupt("digest mismatch"));
        }
        let mut r = Reader::new(content, "bundle", Error::BundleCorrupt);
        r.take(4)?;
        let version = r.u32()?;
        if version == 0 || version > BUNDLE_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                supported: BUNDLE_VERSION,
            });
        }
        let count = r.count(20)?;
        let mut table = Vec::with_capacity(count);
        for _ in 0..count {
            let tag: [u8; 4] = r.take(4)?.try_into().unwrap();
            let offset = r.u64()?;
            let len = r.u64()?;
            let end = offset.checked_add(len).ok_or_else(|| corrupt("section overflow"))?;
            if end > content.len() as u64 {
                return Err(corrupt("section out of bounds"));
            }
            table.push((tag, &content[offset as usize..end as usize]));
        }
        let section = |tag: [u8; 4]| -> Result<Option<&[u8]>> {
            let mut found = table.iter().filter(|(t, _)| *t == tag);
            let first = found.next().map(|(_, body)| *body);
            if found.next().is_some() {
                return Err(corrupt("duplicate section"));
            }
            Ok(first)
        };
        let missing = |name: &str| corrupt(&format!("missing {name} section"));
        let kernels = decode_kernels(section(TAG_KERNELS)?.ok_or_else(|| missing("kernel"))?)?;
        let classifier = decode_classifier(section(TAG_CLASSIFIER)?.ok_or_else(|| missing("classifier"))?)?;
        if classifier.feature_count() != kernels.feature_count() {
            return Err(corrupt("classifier does not match kernel feature count"));
        }
        let quantized = section(TAG_QUANTIZED)?
            .map(|body| decode_quantized(body, &kernels, &classifier))
            .transpose()?;
        let config_digest: [u8; 32] = section(TAG_CONFIG)?
            .ok_or_else(|| missing("config"))?
            .try_into()
            .map_err(|_| corrupt("config digest must be 32 bytes"))?;
        Ok(Self {
            kernels,
            classifier,
            quantized,
            config_digest,
        })
    }
}

/// Writes `bundle` to `path`.
pub fn save_bundle(bundle: &ModelBundle, path: &Path) -> Result<()> {
    std::fs::write(path, bundle.to_bytes()?)?;
    Ok(())
}

pub fn load_bundle(path: &Path) -> Result<ModelBundle> {
    ModelBundle::from_bytes(&std::fs::read(path)?)
}

fn encode_kernels(k: &KernelSet) -> Result<Vec<u8>> {
    let s = &k.structure;
    let mut w = Writer::default();
    w.len_u32(s.window_length)?;
    w.len_u32(s.channels)?;
    w.u64(s.seed);
    w.len_u32(s.plan.dilations.len())?;
    for (&d, &f) in s.plan.dilations.iter().zip(&s.plan.features_per_kernel) {
        w.len_u32(d)?;
        w.len_u32(f)?;
    }
    w.len_u32(s.pairs.len())?;
    for p in &s.pairs {
        w.u16(p.kernel);
        w.u32(p.dilation);
        w.u8(u8::from(p.padding));
        w.len_u32(p.channels.len())?;
        for &c in &p.channels {
            w.u16(c);
        }
        w.u32(p.first_feature);
        w.u32(p.feature_count);
    }
    w.len_u32(k.biases.len())?;
    for &b in &k.biases {
        w.f32(b);
    }
    for &c in &k.comparison_counts {
        w.u32(c);
    }
    Ok(w.buf)
}

fn decode_kernels(body: &[u8]) -> Result<KernelSet> {
    let mut r = Reader::new(body, "kernel section", Error::BundleCorrupt);
    let window_length = r.u32()? as usize;
    let channels = r.u32()? as usize;
    if !(9..=MAX_WINDOW_LENGTH).contains(&window_length) || !(1..=MAX_CHANNELS).contains(&channels) {
        return Err(r.fail("window length or channel count out of range"));
    }
    let seed = r.u64()?;
    let n_dil = r.count(8)?;
    let mut dilations = Vec::with_capacity(n_dil);
    let mut features_per_kernel = Vec::with_capacity(n_dil);
    for _ in 0..n_dil {
        dilations.push(r.u32()? as usize);
        features_per_kernel.push(r.u32()? as usize);
    }
    let n_pairs = r.count(19)?;
    let mut pairs = Vec::with_capacity(n_pairs);
    let mut next_feature = 0u64;
    for _ in 0..n_pairs {
        let kernel = r.u16()?;
        let dilation = r.u32()?;
        let padding = match r.u8()? {
            0 => false,
            1 => true,
            _ => return Err(r.fail("bad padding flag")),
        };
        let n_ch = r.count(2)?;
        let chans = r.vec(n_ch, 2, |r| r.u16())?;
        let first_feature = r.u32()?;
        let feature_count = r.u32()?;
        if kernel as usize >= NUM_KERNELS
            || dilation == 0
            || (dilation as usize).saturating_mul(8) >= window_length
            || chans.is_empty()
            || chans.windows(2).any(|w| w[0] >= w[1])
            || chans.iter().any(|&c| c as usize >= channels)
            || feature_count == 0
            || first_feature as u64 != next_feature
        {
            return Err(r.fail("inconsistent kernel/dilation pair"));
        }
        next_feature += feature_count as u64;
        pairs.push(KernelDilation {
            kernel,
            dilation,
            padding,
            channels: chans,
            first_feature,
            feature_count,
        });
    }
    let n_features = r.count(8)?;
    if n_features as u64 != next_feature {
        return Err(r.fail("feature count does not match pairs"));
    }
    let biases = r.vec(n_features, 4, |r| r.f32())?;
    if biases.iter().any(|b| !b.is_finite()) {
        return Err(r.fail("non-finite bias"));
    }
    let counts = r.vec(n_features, 4, |r| r.u32())?;
    if !r.is_empty() {
        return Err(r.fail("trailing bytes"));
    }
    let plan = crate::transform::DilationPlan {
        dilations,
        features_per_kernel,
    };
    match plan_dilations(window_length, n_features) {
        Ok(expected) if expected == plan => {}
        _ => return Err(Error::BundleCorrupt("dilation plan does not match window length".into())),
    }
    let structure = KernelStructure {
        window_length,
        channels,
        plan,
        pairs,
        seed,
    };
    let set = KernelSet::from_parts(structure, biases);
    if set.comparison_counts != counts {
        return Err(Error::BundleCorrupt("comparison counts do not match structure".into()));
    }
    Ok(set)
}

fn encode_classifier(c: &LinearClassifier) -> Result<Vec<u8>> {
    let mut w = Writer::default();
    w.len_u32(c.feature_count())?;
    w.len_u32(c.class_count())?;
    w.f64(c.lambda);
    for &v in &c.weights {
        w.f64(v);
    }
    for &v in &c.biases {
        w.f64(v);
    }
    for label in &c.class_labels {
        w.str(label)?;
    }
    Ok(w.buf)
}

fn decode_classifier(body: &[u8]) -> Result<LinearClassifier> {
    let mut r = Reader::new(body, "classifier section", Error::BundleCorrupt);
    let t = r.u32()? as usize;
    let k = r.u32()? as usize;
    if k < 2 || t == 0 {
        return Err(r.fail("need at least one feature and two classes"));
    }
    let lambda = r.f64()?;
    let cells = t.checked_mul(k).ok_or_else(|| r.fail("shape overflow"))?;
    let weights = r.vec(cells, 8, |r| r.f64())?;
    let biases = r.vec(k, 8, |r| r.f64())?;
    let class_labels = r.vec(k, 4, |r| r.str())?;
    if !r.is_empty() {
        return Err(r.fail("trailing bytes"));
    }
    if weights.iter().chain(&biases).any(|v| !v.is_finite()) || !(lambda >= 0.0) {
        return Err(r.fail("non-finite parameter"));
    }
    Ok(LinearClassifier {
        weights,
        biases,
        class_labels,
        lambda,
    })
}

fn encode_quantized(q: &QuantizedModel) -> Result<Vec<u8>> {
    let c = &q.calibration;
    let mut w = Writer::default();
    w.u32(c.bit_width);
    w.u32(c.input_clamp);
    w.u64(c.max_footprint);
    w.f64(c.max_abs_bias);
    w.i64(c.s1);
    w.i64(c.s2);
    w.len_u32(q.feature_count())?;
    w.len_u32(q.class_count())?;
    for &v in q.biases_q.iter().chain(&q.weights_q).chain(&q.class_biases_q) {
        w.i64(v);
    }
    Ok(w.buf)
}

fn decode_quantized(body: &[u8], kernels: &KernelSet, classifier: &LinearClassifier) -> Result<QuantizedModel> {
    let mut r = Reader::new(body, "quantized section", Error::BundleCorrupt);
    let calibration = QuantizationCalibration {
        bit_width: r.u32()?,
        input_clamp: r.u32()?,
        max_footprint: r.u64()?,
        max_abs_bias: r.f64()?,
        s1: r.i64()?,
        s2: r.i64()?,
    };
    let t = r.u32()? as usize;
    let k = r.u32()? as usize;
    if t != kernels.feature_count() || k != classifier.class_count() {
        return Err(r.fail("shape does not match the float model"));
    }
    let biases_q = r.vec(t, 8, |r| r.i64())?;
    let weights_q = r.vec(t * k, 8, |r| r.i64())?;
    let class_biases_q = r.vec(k, 8, |r| r.i64())?;
    if !r.is_empty() {
        return Err(r.fail("trailing bytes"));
    }
    let model = QuantizedModel {
        kernels: kernels.clone(),
        biases_q,
        weights_q,
        class_biases_q,
        comparison_counts: kernels.comparison_counts.clone(),
        calibration,
        class_labels: classifier.class_labels.clone(),
    };
    model
        .validate()
        .map_err(|e| Error::BundleCorrupt(format!("quantized model rejected: {e}")))?;
    Ok(model)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::quant::quantize_model;
    use crate::ridge::train_ridge;
    use crate::transform::Window;

    pub(crate) fn small_bundle(quantized: bool) -> ModelBundle {
        let windows: Vec<Window> = (0..12)
            .map(|i| {
                let x = (0..40)
                    .map(|n| ((n * (i + 3)) % 17) as f32 * if i % 2 == 0 { 10.0 } else { -3.0 })
                    .collect();
                Window::univariate(x, 200.0).with_label((i % 2) as u16)
            })
            .collect();
        let kernels = KernelSet::fit(&windows, 168, 4).unwrap();
        let feats: Vec<Vec<f32>> = windows
            .iter()
            .map(|w| kernels.transform(w).unwrap().as_ppv().unwrap().to_vec())
            .collect();
        let labels: Vec<usize> = windows.iter().map(|w| w.label.unwrap() as usize).collect();
        let names = vec!["transport".to_string(), "usage".to_string()];
        let classifier = train_ridge(&feats, &labels, &names, &[1.0]).unwrap();
        let mut bundle = ModelBundle::new(kernels, classifier, [7; 32]);
        if quantized {
            let cal = QuantizationCalibration::new(&bundle.kernels, &bundle.classifier, 16_000, 32).unwrap();
            bundle.quantized = Some(quantize_model(&bundle.kernels, &bundle.classifier, &cal).unwrap());
        }
        bundle
    }

    #[test]
    fn round_trip() {
        for q in [false, true] {
            let b = small_bundle(q);
            let bytes = b.to_bytes().unwrap();
            assert_eq!(ModelBundle::from_bytes(&bytes).unwrap(), b);
            assert_eq!(b.to_bytes().unwrap(), bytes, "encoding is deterministic");
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.rklm");
        let b = small_bundle(true);
        save_bundle(&b, &path).unwrap();
        assert_eq!(load_bundle(&path).unwrap(), b);
    }

    #[test]
    fn truncation_and_bit_flips_are_rejected() {
        let bytes = small_bundle(true).to_bytes().unwrap();
        for cut in [0, 3, 19, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(ModelBundle::from_bytes(&bytes[..cut]), Err(Error::BundleCorrupt(_))));
        }
        for pos in (0..bytes.len()).step_by(7) {
            let mut b = bytes.clone();
            b[pos] ^= 0x10;
            assert!(ModelBundle::from_bytes(&b).is_err(), "flip at {pos} accepted");
        }
    }

    #[test]
    fn future_version_rejected() {
        let mut bytes = small_bundle(false).to_bytes().unwrap();
        bytes[4] = 2;
        let n = bytes.len();
        let crc = crc64(&bytes[..n - 8]);
        bytes[n - 8..].copy_from_slice(&crc.to_le_bytes());
        assert_eq!(
            ModelBundle::from_bytes(&bytes),
            Err(Error::UnsupportedVersion { found: 2, supported: 1 })
        );
    }
}
