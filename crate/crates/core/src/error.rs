use std::path::PathBuf;

/// Errors raised by the core kernels and file formats.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("depth map has no valid pixels")]
    EmptyDepth,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("common validity mask has {common} pixels, at least 2 required")]
    InsufficientOverlap { common: usize },
    #[error("{valid} valid pixels, at least {required} required")]
    InsufficientValid { valid: usize, required: usize },
    #[error("invalid interpolation weights: {0}")]
    Weight(String),
    #[error("relocation factor must be positive, got {0}")]
    Factor(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("synthesized label has no valid pixels")]
    EmptyResult,
    #[error("unsupported or unrecognized format: {0}")]
    Format(String),
    #[error("corrupt file {path}: {reason}")]
    CorruptFile { path: PathBuf, reason: String },
    #[error("{0}")]
    Range(String),
    #[error("{}", manifest_message(*.entry, .message))]
    Manifest { entry: Option<usize>, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn manifest_message(entry: Option<usize>, message: &str) -> String {
    match entry {
        Some(i) => format!("manifest entry {i}: {message}"),
        None => format!("manifest: {message}"),
    }
}

impl Error {
    /// An I/O error that names the file involved.
    pub fn io_at(path: &std::path::Path, e: std::io::Error) -> Self {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    }

    /// Stable short code, used by the CLI and anything surfacing errors across a boundary.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyDepth => "EmptyDepth",
            Error::Shape(_) => "ShapeError",
            Error::InsufficientOverlap { .. } => "InsufficientOverlap",
            Error::InsufficientValid { .. } => "InsufficientValid",
            Error::Weight(_) => "WeightError",
            Error::Factor(_) => "FactorError",
            Error::Config(_) => "ConfigError",
            Error::EmptyResult => "EmptyResult",
            Error::Format(_) => "FormatError",
            Error::CorruptFile { .. } => "CorruptFile",
            Error::Range(_) => "RangeError",
            Error::Manifest { .. } => "ManifestError",
            Error::Io(_) => "IoError",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
