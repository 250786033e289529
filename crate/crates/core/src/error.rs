use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix {0:?} is not unimodular (|det| != 1)")]
    NotUnimodular([[i64; 2]; 2]),

    #[error("vector ({0}, {1}) is not reduced (gcd != 1)")]
    NotReduced(i64, i64),

    #[error("deck matrix is not the identity; the operation requires a map homotopic to the identity")]
    NonIdentityDeck,

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("set is not essential: {0}")]
    Inessential(String),

    #[error("raster geometries differ")]
    GeometryMismatch,

    #[error("circloids are incomparable")]
    Incomparable,

    #[error("space-between check failed: distinct resolved circloids C <= C' with empty gap")]
    SpaceBetweenViolated,

    #[error("component label {label} out of range (have {count})")]
    LabelOutOfRange { label: usize, count: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("projection refused: {0} overlapping circloid pairs")]
    ProjectionRefused(usize),

    #[error("point {0:?} is outside every circloid window")]
    OutsideWindows((f64, f64)),

    #[error("boundary maps disagree under gluing by {0:e}")]
    BoundaryMismatch(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("pgm parse error: {0}")]
    Pgm(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures that stem from violated numerical preconditions
    /// (as opposed to malformed input).
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::WindowTooSmall(_)
                | Error::Inessential(_)
                | Error::Precondition(_)
                | Error::NonIdentityDeck
                | Error::ProjectionRefused(_)
                | Error::BoundaryMismatch(_)
                | Error::OutsideWindows(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
