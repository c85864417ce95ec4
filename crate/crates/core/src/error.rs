use thiserror::Error;

/// Errors raised across the homogenization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid inclusion shape: {0}")]
    InvalidShape(String),
    #[error("mesh generation failed: {0}")]
    MeshFailure(String),
    #[error("mesh too coarse: {0}")]
    ResolutionError(String),
    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),
    #[error("constraint rows are linearly dependent: {0}")]
    RankDeficiency(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("unsupported request: {0}")]
    Unsupported(String),
    #[error("cell problem solvability violated: defect {defect:e} exceeds {threshold:e}")]
    SolvabilityViolation { defect: f64, threshold: f64 },
    #[error("incompatible Neumann data: {0}")]
    IncompatibleData(String),
    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),
    #[error("flat data cannot be fitted: {0}")]
    FlatData(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Wraps an error with the pipeline stage that produced it.
    pub fn at_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage { stage: stage.into(), source: Box::new(self) }
    }

    /// The innermost error, with stage labels peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
