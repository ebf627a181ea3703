use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed file {path}: at `{field}`: {message}")]
    MalformedFile {
        path: PathBuf,
        field: String,
        message: String,
    },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{segment} segment of {len} samples cannot host a {window}-sample window")]
    SegmentTooShort {
        segment: &'static str,
        len: usize,
        window: usize,
    },

    #[error("decomposition failed: {0}")]
    DecompositionFailure(String),

    #[error("empty input")]
    EmptyInput,

    #[error("input too short: need at least {needed} samples, got {got}")]
    InputTooShort { needed: usize, got: usize },

    #[error("degenerate scaling: only {valid} usable lag points, need at least 3")]
    DegenerateScaling { valid: usize },

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("too few trials: {got} (need at least {needed})")]
    TooFewTrials { got: usize, needed: usize },

    #[error("training labels contain a single class")]
    SingleClassTraining,

    #[error("feature width mismatch: model expects {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Wraps an error raised while featurizing one channel of one instance.
    #[error("channel {channel} of instance at sample {offset}: {source}")]
    Feature {
        channel: usize,
        offset: usize,
        #[source]
        source: Box<Error>,
    },

    /// Wraps an error with the pipeline stage that raised it.
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    /// Wraps an error with the trial it came from.
    #[error("trial {trial}: {source}")]
    Trial {
        trial: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_trial(self, trial: impl Into<String>) -> Self {
        Error::Trial {
            trial: trial.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Feature { source, .. } | Error::Trial { source, .. } | Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// Whether the failure stems from invalid input data rather than numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self.root(),
            Error::MalformedFile { .. }
                | Error::InvariantViolation(_)
                | Error::Io { .. }
                | Error::SegmentTooShort { .. }
                | Error::TooFewTrials { .. }
                | Error::LengthMismatch { .. }
        )
    }
}
