use thiserror::Error;

/// Errors produced anywhere in the training, quantization and I/O pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("window too short: {length} samples, need at least {min}")]
    WindowTooShort { length: usize, min: usize },

    #[error("feature count must be multiple of kernel count ({kernels}), got {count}")]
    FeatureCount { count: usize, kernels: usize },

    #[error("no channels assigned")]
    NoChannels,

    #[error("cannot calibrate biases: no training windows")]
    NoTrainingWindows,

    #[error("channel count mismatch: model expects {expected}, window has {found}")]
    ChannelMismatch { expected: usize, found: usize },

    #[error("window length mismatch: model expects {expected}, window has {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("feature dimension mismatch: expected {expected}, got {found}")]
    FeatureDimension { expected: usize, found: usize },

    #[error("class absent from training data: {0}")]
    ClassAbsent(String),

    #[error("ill-conditioned: provide λ>0")]
    IllConditioned,

    #[error("invalid training data: {0}")]
    InvalidTrainingData(String),

    #[error("bit width insufficient for input range (b = {bits})")]
    BitWidthInsufficient { bits: u32 },

    #[error("degenerate classifier: cannot calibrate")]
    DegenerateClassifier,

    #[error("quantization overflow (calibration bug): {0}")]
    QuantizationOverflow(String),

    #[error("invalid calibration parameter: {0}")]
    InvalidCalibration(String),

    #[error("nothing to validate")]
    NothingToValidate,

    #[error("upsampling not supported ({source_rate} Hz -> {target_rate} Hz)")]
    Upsampling { source_rate: f64, target_rate: f64 },

    #[error("unsupported rate pair ({source_rate} Hz -> {target_rate} Hz)")]
    UnsupportedRatePair { source_rate: f64, target_rate: f64 },

    #[error("invalid filter design: {0}")]
    InvalidFilter(String),

    #[error("expected tri-axial input, got {0} channels")]
    ExpectedTriAxial(usize),

    #[error("cannot balance: class {0} exhausted")]
    CannotBalance(String),

    #[error("brand not found: {0}")]
    BrandNotFound(String),

    #[error("bundle corrupt: {0}")]
    BundleCorrupt(String),

    #[error("unsupported format version {found} (newest supported is {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("model is not quantized; run quantize before export")]
    NotQuantized,

    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn malformed(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Malformed {
        what,
        detail: detail.into(),
    }
}
