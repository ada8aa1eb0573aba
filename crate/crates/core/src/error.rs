use std::path::PathBuf;

use thiserror::Error;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("manifest schema violation: {0}")]
    Schema(String),

    #[error("game {game} is listed more than once")]
    DuplicateGame { game: String },

    #[error("genre {genre} has {games} game(s); at least 2 are required")]
    TooFewGames { genre: usize, games: usize },

    #[error("manifest validation failed: {0}")]
    Validation(String),

    #[error("split infeasible: {0}")]
    InfeasibleSplit(String),

    #[error("input shape mismatch: {0}")]
    Shape(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("degenerate batch of size {0}; at least 2 samples are required")]
    DegenerateBatch(usize),

    #[error("silhouette needs at least two distinct labels")]
    SingleLabel,

    #[error("non-finite gradient in tensor {tensor}")]
    NonFiniteGradient { tensor: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("checkpoint format: {0}")]
    Checkpoint(String),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::InfeasibleSplit(_) => ErrorKind::Config,
            Error::NonFiniteGradient { .. } | Error::Numeric(_) => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }

    /// Short stable identifier for machine-readable error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::MissingFile(_) => "missing_file",
            Error::Schema(_) => "schema",
            Error::DuplicateGame { .. } => "duplicate_game",
            Error::TooFewGames { .. } => "too_few_games",
            Error::Validation(_) => "validation",
            Error::InfeasibleSplit(_) => "infeasible_split",
            Error::Shape(_) => "shape",
            Error::LabelOutOfRange { .. } => "label_range",
            Error::DegenerateBatch(_) => "degenerate_batch",
            Error::SingleLabel => "single_label",
            Error::NonFiniteGradient { .. } => "non_finite_gradient",
            Error::Numeric(_) => "numeric",
            Error::Checkpoint(_) => "checkpoint",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Image(_) => "image",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
