//! End-to-end workflow: configuration, corpus loading, training,
//! quantization, evaluation and hyperparameter scans.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::{footprint, ModelBundle};
use crate::metrics::{accuracy, binary_f1};
use crate::quant::{
    quantize_model, validate_pair, AgreementReport, QuantizationCalibration, DEFAULT_BIT_WIDTH,
    DEFAULT_INPUT_CLAMP_MG, MAX_BIT_WIDTH, MIN_BIT_WIDTH,
};
use crate::ridge::{predict_float, train_ridge, DEFAULT_LAMBDA_GRID};
use crate::signal::synth::{SynthConfig, SynthGenerator};
use crate::signal::{
    l1_norm, parse_recording_csv, parse_sidecar, resample, split_by_brand, DatasetSplit, Recording, SplitSpec,
    CLASS_NAMES, USAGE,
};
use crate::transform::{KernelSet, Window, KERNEL_LENGTH, NUM_KERNELS};

pub const MIN_SAMPLING_RATE: f64 = 10.0;
pub const MAX_SAMPLING_RATE: f64 = 3200.0;
pub const MIN_WINDOW_LEN: usize = 5;
pub const MAX_WINDOW_LEN: usize = 200;
pub const MAX_FEATURE_COUNT: usize = 4 * NUM_KERNELS;

/// Everything a run depends on. Loaded from TOML; unknown keys are errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Model sampling rate (Hz).
    pub sampling_rate: f64,
    pub window_len: usize,
    pub feature_count: usize,
    pub lambda_grid: Vec<f64>,
    /// Input clamp in milli-G.
    pub input_clamp_mg: u32,
    pub bit_width: u32,
    pub train_brand: String,
    pub train_count: usize,
    pub val_count: usize,
    /// Cap on held-out test windows; 0 keeps all.
    pub test_limit: usize,
    /// Directory of recording CSVs with JSON sidecars. Absent means the
    /// synthetic corpus.
    pub data_dir: Option<PathBuf>,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            sampling_rate: 200.0,
            window_len: 80,
            feature_count: NUM_KERNELS,
            lambda_grid: DEFAULT_LAMBDA_GRID.to_vec(),
            input_clamp_mg: DEFAULT_INPUT_CLAMP_MG,
            bit_width: DEFAULT_BIT_WIDTH,
            train_brand: "A".into(),
            train_count: 2000,
            val_count: 400,
            test_limit: 2000,
            data_dir: None,
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(MIN_SAMPLING_RATE..=MAX_SAMPLING_RATE).contains(&self.sampling_rate) {
            return fail(format!(
                "sampling_rate {} outside [{MIN_SAMPLING_RATE}, {MAX_SAMPLING_RATE}]",
                self.sampling_rate
            ));
        }
        if !(MIN_WINDOW_LEN..=MAX_WINDOW_LEN).contains(&self.window_len) {
            return fail(format!(
                "window_len {} outside [{MIN_WINDOW_LEN}, {MAX_WINDOW_LEN}]",
                self.window_len
            ));
        }
        if !self.feature_count.is_multiple_of(NUM_KERNELS) || !(NUM_KERNELS..=MAX_FEATURE_COUNT).contains(&self.feature_count) {
            return fail(format!(
                "feature_count {} must be a multiple of {NUM_KERNELS} in [{NUM_KERNELS}, {MAX_FEATURE_COUNT}]",
                self.feature_count
            ));
        }
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return fail("lambda_grid must be non-empty and non-negative".into());
        }
        if self.input_clamp_mg == 0 {
            return fail("input_clamp_mg must be positive".into());
        }
        if !(MIN_BIT_WIDTH..=MAX_BIT_WIDTH).contains(&self.bit_width) {
            return fail(format!("bit_width outside [{MIN_BIT_WIDTH}, {MAX_BIT_WIDTH}]"));
        }
        if self.train_count == 0 || self.val_count == 0 {
            return fail("train_count and val_count must be positive".into());
        }
        let s = &self.synth;
        if !(s.source_rate_hz >= self.sampling_rate) || !s.source_rate_hz.is_finite() {
            return fail("synth.source_rate_hz must be at least sampling_rate".into());
        }
        if !(s.session_duration_s >= 0.0 && s.session_duration_s <= 86_400.0) {
            return fail("synth.session_duration_s must be in [0, 86400]".into());
        }
        if !(s.segment_min_s > 0.0 && s.segment_max_s >= s.segment_min_s && s.segment_max_s.is_finite()) {
            return fail("synth segment bounds must satisfy 0 < min <= max".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical TOML form.
    pub fn digest(&self) -> [u8; 32] {
        let text = self.to_toml().unwrap_or_default();
        Sha256::digest(text.as_bytes()).into()
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            window_len: self.window_len,
            train_count: self.train_count,
            val_count: self.val_count,
            test_limit: (self.test_limit > 0).then_some(self.test_limit),
            seed: self.seed,
        }
    }
}

/// Resamples a raw tri-axial recording to `rate` and fuses the axes.
pub fn preprocess(recording: &Recording, rate: f64) -> Result<Recording> {
    l1_norm(&resample(recording, rate)?)
}

/// Reads `*.csv` recordings with same-stem `.json` sidecars, in file name
/// order.
pub fn read_csv_dir(dir: &Path) -> Result<Vec<Recording>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    paths
        .iter()
        .enumerate()
        .map(|(i, path)| {
            let sidecar = path.with_extension("json");
            let meta = parse_sidecar(&std::fs::read_to_string(&sidecar).map_err(|e| {
                Error::Io(format!("{}: {e}", sidecar.display()))
            })?)?;
            parse_recording_csv(&std::fs::read(path)?, meta, i as u32)
        })
        .collect()
}

/// Loads the corpus once per rate, resampled and L1-fused. Synthetic
/// sessions are streamed so only fused recordings stay in memory.
pub fn load_corpus(config: &RunConfig, rates: &[f64]) -> Result<Vec<Vec<Recording>>> {
    let mut out = vec![Vec::new(); rates.len()];
    let mut push = |rec: Recording| -> Result<()> {
        for (slot, &rate) in out.iter_mut().zip(rates) {
            slot.push(preprocess(&rec, rate)?);
        }
        Ok(())
    };
    match &config.data_dir {
        Some(dir) => read_csv_dir(dir)?.into_iter().try_for_each(&mut push)?,
        None => SynthGenerator::new(config.synth.clone(), config.seed).try_for_each(&mut push)?,
    }
    Ok(out)
}

pub fn prepare_split(config: &RunConfig, corpus: &[Recording]) -> Result<DatasetSplit> {
    split_by_brand(corpus, &config.train_brand, &config.split_spec())
}

fn labels_of(windows: &[Window]) -> Vec<usize> {
    windows.iter().map(|w| w.label.unwrap_or(0) as usize).collect()
}

/// Accuracy and Usage-class F1.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Scores {
    pub windows: usize,
    pub accuracy: f64,
    pub f1: f64,
}

fn scores(truth: &[usize], pred: &[usize]) -> Scores {
    Scores {
        windows: truth.len(),
        accuracy: accuracy(truth, pred),
        f1: binary_f1(truth, pred, USAGE as usize),
    }
}

pub fn predict_float_all(kernels: &KernelSet, bundle: &ModelBundle, windows: &[Window]) -> Result<Vec<usize>> {
    windows
        .iter()
        .map(|w| {
            let f = kernels.transform(w)?;
            Ok(predict_float(f.as_ppv().unwrap_or_default(), &bundle.classifier)?.class)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub lambda: f64,
    pub train: Scores,
    pub validation: Scores,
}

/// Fits the transform on the training windows and trains the classifier.
pub fn train(config: &RunConfig, split: &DatasetSplit) -> Result<(ModelBundle, TrainReport)> {
    let kernels = KernelSet::fit(&split.train, config.feature_count, config.seed)?;
    let features: Vec<Vec<f32>> = split
        .train
        .iter()
        .map(|w| Ok(kernels.transform(w)?.as_ppv().unwrap_or_default().to_vec()))
        .collect::<Result<_>>()?;
    let labels = labels_of(&split.train);
    let names: Vec<String> = CLASS_NAMES.iter().map(|s| s.to_string()).collect();
    let classifier = train_ridge(&features, &labels, &names, &config.lambda_grid)?;
    let bundle = ModelBundle::new(kernels, classifier, config.digest());
    let train_pred: Vec<usize> = features
        .iter()
        .map(|f| Ok(predict_float(f, &bundle.classifier)?.class))
        .collect::<Result<_>>()?;
    let val_pred = predict_float_all(&bundle.kernels, &bundle, &split.validation)?;
    let report = TrainReport {
        lambda: bundle.classifier.lambda,
        train: scores(&labels, &train_pred),
        validation: scores(&labels_of(&split.validation), &val_pred),
    };
    Ok((bundle, report))
}

/// Calibrates and attaches the integer model.
pub fn quantize(bundle: &mut ModelBundle, input_clamp_mg: u32, bit_width: u32) -> Result<()> {
    let calibration = QuantizationCalibration::new(&bundle.kernels, &bundle.classifier, input_clamp_mg, bit_width)?;
    bundle.quantized = Some(quantize_model(&bundle.kernels, &bundle.classifier, &calibration)?);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub float: Scores,
    /// Present for quantized bundles.
    pub quantized: Option<Scores>,
    pub agreement: Option<f64>,
    pub disagreements: usize,
}

impl EvalReport {
    fn from_agreement(a: &AgreementReport) -> Self {
        Self {
            float: Scores {
                windows: a.windows,
                accuracy: a.float.accuracy,
                f1: a.float.f1,
            },
            quantized: Some(Scores {
                windows: a.windows,
                accuracy: a.quant.accuracy,
                f1: a.quant.f1,
            }),
            agreement: Some(a.agreement_rate),
            disagreements: a.windows - a.agreements,
        }
    }
}

/// Scores a bundle on labeled windows with every available inference path.
pub fn evaluate(bundle: &ModelBundle, windows: &[Window]) -> Result<EvalReport> {
    if windows.is_empty() {
        return Err(Error::NothingToValidate);
    }
    match &bundle.quantized {
        Some(q) => {
            let a = validate_pair(&bundle.kernels, &bundle.classifier, q, windows, USAGE as usize)?;
            Ok(EvalReport::from_agreement(&a))
        }
        None => {
            let pred = predict_float_all(&bundle.kernels, bundle, windows)?;
            Ok(EvalReport {
                float: scores(&labels_of(windows), &pred),
                quantized: None,
                agreement: None,
                disagreements: 0,
            })
        }
    }
}

/// Operations per inference on the integer path: multiply-accumulates of
/// every convolution, one comparison per counted position and bias, and the
/// classifier dot products.
pub fn operation_count(bundle: &ModelBundle) -> u64 {
    let s = &bundle.kernels.structure;
    let conv: u64 = s
        .pairs
        .iter()
        .map(|p| {
            let positions = p.comparison_count(s.window_length) as u64;
            positions * (KERNEL_LENGTH * p.channels.len()) as u64 + positions * p.feature_count as u64
        })
        .sum();
    let classes = bundle.classifier.class_count() as u64;
    conv + bundle.kernels.feature_count() as u64 * (classes + 1)
}

/// Grid axes of a scan. Every combination is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub sampling_rates: Vec<f64>,
    pub window_lens: Vec<usize>,
    pub feature_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub sampling_rate: f64,
    pub window_len: usize,
    pub feature_count: usize,
    /// Usage F1 of the quantized model on held-out brands.
    pub f1: f64,
    pub accuracy: f64,
    pub parameter_bytes: usize,
    pub working_bytes: usize,
    pub operations: u64,
}

pub const SCAN_CSV_HEADER: &str =
    "sampling_rate,window_len,feature_count,f1,accuracy,parameter_bytes,working_bytes,operations";

impl ScanRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{:.4},{:.4},{},{},{}",
            self.sampling_rate,
            self.window_len,
            self.feature_count,
            self.f1,
            self.accuracy,
            self.parameter_bytes,
            self.working_bytes,
            self.operations
        )
    }
}

/// Trains, quantizes and tests one model per grid point. The corpus is
/// loaded once for all rates; rows come out in grid order.
pub fn hyperscan(base: &RunConfig, grid: &ScanGrid) -> Result<Vec<ScanRow>> {
    check_grid(grid)?;
    let corpora = load_corpus(base, &grid.sampling_rates)?;
    hyperscan_corpora(base, grid, &corpora)
}

fn check_grid(grid: &ScanGrid) -> Result<()> {
    if grid.sampling_rates.is_empty() || grid.window_lens.is_empty() || grid.feature_counts.is_empty() {
        return Err(Error::Config("hyperscan grid is empty".into()));
    }
    Ok(())
}

/// [`hyperscan`] on corpora already loaded with [`load_corpus`] for the
/// grid's rates, in the same order.
pub fn hyperscan_corpora(base: &RunConfig, grid: &ScanGrid, corpora: &[Vec<Recording>]) -> Result<Vec<ScanRow>> {
    check_grid(grid)?;
    if corpora.len() != grid.sampling_rates.len() {
        return Err(Error::Config("one corpus per sampling rate required".into()));
    }
    let mut rows = Vec::new();
    for (&rate, corpus) in grid.sampling_rates.iter().zip(corpora) {
        for &window_len in &grid.window_lens {
            let config = RunConfig {
                sampling_rate: rate,
                window_len,
                ..base.clone()
            };
            config.validate()?;
            let split = prepare_split(&config, corpus)?;
            for &feature_count in &grid.feature_counts {
                let config = RunConfig {
                    feature_count,
                    ..config.clone()
                };
                config.validate()?;
                let (mut bundle, _) = train(&config, &split)?;
                quantize(&mut bundle, config.input_clamp_mg, config.bit_width)?;
                let eval_set = if split.test.is_empty() { &split.validation } else { &split.test };
                let report = evaluate(&bundle, eval_set)?;
                let q = report.quantized.unwrap_or(report.float);
                let fp = footprint(bundle.quantized.as_ref().expect("quantized above"))?;
                rows.push(ScanRow {
                    sampling_rate: rate,
                    window_len,
                    feature_count,
                    f1: q.f1,
                    accuracy: q.accuracy,
                    parameter_bytes: fp.parameter_bytes,
                    working_bytes: fp.working_bytes,
                    operations: operation_count(&bundle),
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_bounds() {
        assert!(RunConfig::default().validate().is_ok());
        let ok = RunConfig::from_toml_str("sampling_rate = 200.0\nwindow_len = 80\nfeature_count = 84\n").unwrap();
        assert_eq!(ok.window_len, 80);
        for bad in [
            "window_len = 300",
            "window_len = 4",
            "sampling_rate = 5.0",
            "sampling_rate = 6400.0",
            "feature_count = 100",
            "feature_count = 420",
            "lambda_grid = []",
            "bit_width = 4",
            "unknown_key = 1",
        ] {
            assert!(matches!(RunConfig::from_toml_str(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn digest_tracks_content() {
        let a = RunConfig::default();
        let b = RunConfig { seed: 1, ..a.clone() };
        assert_eq!(a.digest(), a.clone().digest());
        assert_ne!(a.digest(), b.digest());
        let round = RunConfig::from_toml_str(&a.to_toml().unwrap()).unwrap();
        assert_eq!(round, a);
    }

    #[test]
    fn small_end_to_end() {
        let config = RunConfig {
            train_count: 200,
            val_count: 40,
            test_limit: 100,
            synth: SynthConfig {
                session_duration_s: 60.0,
                ..SynthConfig::with_brands(&["A", "B"], 4)
            },
            ..RunConfig::default()
        };
        let corpus = load_corpus(&config, &[200.0]).unwrap().remove(0);
        assert!(corpus.iter().all(|r| r.channels() == 1 && r.rate_hz == 200.0));
        let split = prepare_split(&config, &corpus).unwrap();
        let (mut bundle, report) = train(&config, &split).unwrap();
        assert!(report.validation.accuracy > 0.5);
        quantize(&mut bundle, config.input_clamp_mg, config.bit_width).unwrap();
        let eval = evaluate(&bundle, &split.test).unwrap();
        assert!(eval.agreement.unwrap() > 0.9);
        assert!(operation_count(&bundle) > 84 * 9);
    }
}
