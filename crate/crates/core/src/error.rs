use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid code parameters: {0}")]
    InvalidCode(String),

    #[error("code is already deformed")]
    AlreadyDeformed,

    #[error("exhaustive distance search refused for d = {0} (limit is 5)")]
    DistanceSearchTooLarge(usize),

    #[error("invalid noise parameters: {0}")]
    InvalidNoise(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("detector {0} is not deterministic in the noiseless circuit")]
    NonDeterministicDetector(usize),

    #[error("error mechanism {detectors:?} has probability {probability} > 0.5 after merging")]
    ProbabilityTooLarge { detectors: Vec<u32>, probability: f64 },

    #[error("hyperedge {detectors:?} (observables {observables:#x}) cannot be decomposed into existing edges")]
    UndecomposableHyperedge { detectors: Vec<u32>, observables: u64 },

    #[error("defect {0} cannot be matched to another defect or the boundary")]
    UnmatchableDefects(usize),

    #[error("conditional probability {0} outside (0, 1)")]
    InvalidProbability(f64),

    #[error("decoder {decoder} requires a CSS code")]
    RequiresCss { decoder: String },

    #[error("threshold curves do not cross in the scanned window")]
    NoCrossing,

    #[error("not enough data to fit: {0}")]
    InsufficientData(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }

    /// Errors caused by user input rather than by a failing experiment.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::InvalidCode(_)
                | Error::InvalidNoise(_)
                | Error::RequiresCss { .. }
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
