use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate box: height {height} must be positive")]
    DegenerateBox { height: f64 },

    #[error("degenerate state vector: aspect {aspect}, height {height} must both be positive")]
    DegenerateState { aspect: f64, height: f64 },

    #[error("degenerate measurement: height {height} must be positive")]
    DegenerateMeasurement { height: f64 },

    #[error("innovation covariance is not invertible")]
    SingularInnovation,

    #[error("cost matrix entry ({row}, {col}) is not finite")]
    NonFiniteCost { row: usize, col: usize },

    #[error("cost matrix must be rectangular: row {row} has {found} columns, expected {expected}")]
    RaggedCostMatrix { row: usize, found: usize, expected: usize },

    #[error("brute-force assignment limited to 8x8, got {rows}x{cols}")]
    SizeLimit { rows: usize, cols: usize },

    #[error("cannot compute an adaptive threshold over zero scores")]
    EmptyScores,

    #[error("confidence score {score} at index {index} is outside [0, 1]")]
    ScoreOutOfRange { index: usize, score: f64 },

    #[error("frame index {frame} does not advance past {previous}")]
    NonMonotonicFrame { frame: u32, previous: u32 },

    #[error("detection carries frame {detection_frame} but was passed to frame {frame}")]
    FrameMismatch { frame: u32, detection_frame: u32 },

    #[error("frame {frame}: {source}")]
    AtFrame {
        frame: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("ground truth is empty; MOTA is undefined")]
    EmptyGroundTruth,

    #[error("invalid IoU gate {0}; expected a value in (0, 1]")]
    InvalidIouGate(f64),

    #[error("invalid tracker configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("unknown preset `{0}` (expected clean, occlusion-dip, dense-clutter or mot20-like)")]
    UnknownPreset(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
