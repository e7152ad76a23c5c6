use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the odometry engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("image size mismatch: left {left:?}, right {right:?}")]
    ImageSizeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("disc of radius {radius} at ({cx}, {cy}) leaves the image")]
    DiscOutOfBounds { cx: i64, cy: i64, radius: u32 },

    #[error("receptive field leaves the image")]
    DescriptorOutOfBounds,

    #[error("disparity {disparity} below minimum {min}")]
    DisparityTooSmall { disparity: f64, min: f64 },

    #[error("point behind camera (depth {depth})")]
    BehindCamera { depth: f64 },

    #[error("normal equations are singular")]
    SingularSystem,

    #[error("gauss-newton diverged")]
    Diverged,

    #[error("motion estimation failed: {0}")]
    EstimationFailed(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("trajectory length mismatch: estimate {est}, ground truth {gt}")]
    TrajectoryLengthMismatch { est: usize, gt: usize },

    #[error("scene construction failed: {0}")]
    SceneConstruction(String),

    #[error("sprites {a} and {b} overlap in frame {frame}")]
    SpriteOverlap { frame: usize, a: usize, b: usize },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("frame {index}: {source}")]
    Frame {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
