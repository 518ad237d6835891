use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record{}: {reason}", line.map(|l| format!(" on line {l}")).unwrap_or_default())]
    MalformedRecord { line: Option<usize>, reason: String },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("degenerate training corpus: {0}")]
    DegenerateCorpus(String),
    #[error("model serialization: {0}")]
    Serde(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SplitError {
    #[error("no task sentence found (no WH-sentence and no question mark)")]
    NoTaskFound,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("metric input is empty: {0}")]
    EmptyInput(&'static str),
}

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("failed to read embeddings {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: unparseable value {value:?}")]
    BadValue { line: usize, value: String },
    #[error("line {line}: vector for {token:?} has zero norm")]
    ZeroVector { line: usize, token: String },
    #[error("unknown token {0:?}")]
    UnknownToken(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GatewayError {
    #[error("model backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("malformed backend response: {0}")]
    MalformedResponse(String),
    #[error("invalid gateway request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReplaceError {
    #[error("stale replacement plan: span {start}..{end} no longer reads {surface:?}")]
    OffsetMismatch { start: usize, end: usize, surface: String },
}
