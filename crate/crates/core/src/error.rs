use std::fmt;

use thiserror::Error;

/// Header field of a bias frame that failed validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameField {
    Magic,
    Version,
    Dimensions,
    Length,
}

impl fmt::Display for FrameField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            FrameField::Magic => "magic",
            FrameField::Version => "version",
            FrameField::Dimensions => "dimensions",
            FrameField::Length => "length",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum RisError {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("frequency {frequency_hz} Hz outside model validity band [{lo_hz}, {hi_hz}] Hz")]
    OutOfBand {
        frequency_hz: f64,
        lo_hz: f64,
        hi_hz: f64,
    },

    #[error("element ({row}, {col}) is masked")]
    MaskedElement { row: usize, col: usize },

    #[error("element index ({row}, {col}) outside {rows}x{cols} grid")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("steering angle theta={theta_deg} deg beyond the +/-{limit_deg} deg scan range")]
    BeyondScanRange { theta_deg: f64, limit_deg: f64 },

    #[error("bias frame format error in {field}: {detail}")]
    Format { field: FrameField, detail: String },

    #[error("pattern has no radiated power")]
    EmptyPattern,

    #[error("unsupported convolutional code: rate 1/{inverse_rate}, constraint length {constraint_length}")]
    UnsupportedCode {
        inverse_rate: usize,
        constraint_length: usize,
    },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: String, got: usize },

    #[error("frame overflow: {requested} bits requested, capacity {capacity} bits")]
    FrameOverflow { requested: usize, capacity: usize },

    #[error("no frame found: peak timing metric {peak_metric:.4} below threshold {threshold}")]
    NoFrameFound { peak_metric: f64, threshold: f64 },

    #[error("[{stage}] {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<RisError>,
    },
}

impl RisError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        RisError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn format(field: FrameField, detail: impl Into<String>) -> Self {
        RisError::Format {
            field,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, RisError>;

/// Tags errors from a processing stage with the stage name.
pub(crate) trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| RisError::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
