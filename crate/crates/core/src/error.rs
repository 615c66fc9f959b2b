use std::path::PathBuf;

/// Errors raised anywhere in the attribution pipeline.
///
/// Variant names follow the stage that raised them so callers (and the CLI
/// exit code mapping) can tell data problems from oracle failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema validation: {0}")]
    SchemaValidation(String),

    #[error("keypoint `{0}` has no skeleton edges (zero degree)")]
    ZeroDegree(String),

    #[error("schema mismatch: expected {expected} keypoints, got {actual}")]
    SchemaMismatch { expected: usize, actual: usize },

    #[error("oracle io: {message}")]
    OracleIo {
        message: String,
        /// Raw payload received from the backend, if any.
        payload: Option<String>,
    },

    #[error("missing coalition {0}")]
    MissingCoalition(String),

    #[error("malformed table: {0}")]
    MalformedTable(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("keypoint ({x}, {y}) lies outside image bounds {width}x{height}")]
    OutOfBounds {
        x: f64,
        y: f64,
        width: u32,
        height: u32,
    },

    #[error("degenerate row {0}: drops sum to zero")]
    DegenerateRow(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("group count {g} out of range 1..={n}")]
    GroupCountOutOfRange { g: usize, n: usize },

    #[error("{0} players exceeds the exact enumeration limit of {max}", max = crate::shapley::MAX_EXACT_PLAYERS)]
    TooManyPlayers(usize),

    #[error("degenerate attribution: no positive entries")]
    DegenerateAttribution,

    #[error("incomplete input: {0}")]
    IncompleteInput(String),

    #[error("bad keypoint array: expected {expected} values, got {actual}")]
    BadKeypointArray { expected: usize, actual: usize },

    #[error("annotation refers to unknown image id {0}")]
    DanglingImageId(u64),

    #[error("insufficient overlapping rows for pair ({0}, {1})")]
    InsufficientPairs(usize, usize),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("image: {0}")]
    Image(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn oracle(message: impl Into<String>) -> Self {
        Error::OracleIo {
            message: message.into(),
            payload: None,
        }
    }

    /// Stable kebab-case name of the variant, used in CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::SchemaValidation(_) => "schema-validation",
            Error::ZeroDegree(_) => "zero-degree",
            Error::SchemaMismatch { .. } => "schema-mismatch",
            Error::OracleIo { .. } => "oracle-io",
            Error::MissingCoalition(_) => "missing-coalition",
            Error::MalformedTable(_) => "malformed-table",
            Error::Config(_) => "config",
            Error::OutOfBounds { .. } => "out-of-bounds",
            Error::DegenerateRow(_) => "degenerate-row",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::GroupCountOutOfRange { .. } => "group-count-out-of-range",
            Error::TooManyPlayers(_) => "too-many-players",
            Error::DegenerateAttribution => "degenerate-attribution",
            Error::IncompleteInput(_) => "incomplete-input",
            Error::BadKeypointArray { .. } => "bad-keypoint-array",
            Error::DanglingImageId(_) => "dangling-image-id",
            Error::InsufficientPairs(..) => "insufficient-pairs",
            Error::NonFinite(_) => "non-finite",
            Error::Image(_) => "image",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    /// True for failures that originate in an oracle backend.
    pub fn is_oracle(&self) -> bool {
        matches!(self, Error::OracleIo { .. } | Error::MissingCoalition(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
