use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not enough points: need at least {needed}, got {got}")]
    NotEnoughPoints { needed: usize, got: usize },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("frame index {new} does not follow {last}")]
    NonMonotonicFrame { last: u64, new: u64 },

    #[error("no time known for frame {0}")]
    MissingFrameTime(u64),

    #[error("no ego state within {max_skew} s of t = {t}")]
    EgoSkew { t: f64, max_skew: f64 },

    #[error("unknown sensor id {0}")]
    UnknownSensor(u32),

    #[error("invalid time step: {0}")]
    InvalidTimeStep(f64),

    #[error("cluster has no velocity estimate")]
    MissingVelocity,

    #[error("no samples could be matched to ground truth")]
    NoMatchedSamples,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
