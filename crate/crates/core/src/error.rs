use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // topology / network structure
    #[error("motif size {motif} does not divide layer {layer} size {size}")]
    Divisibility {
        layer: usize,
        size: usize,
        motif: usize,
    },
    #[error("a network needs at least an input and an output layer, got {0} layer size(s)")]
    EmptyNetwork(usize),
    #[error("invalid density specification: {0}")]
    InvalidDensity(String),
    #[error("layer index {index} out of range for {layers} weight layer(s)")]
    LayerIndex { index: usize, layers: usize },
    #[error("shape mismatch for {what}: expected {expected}, found {found}")]
    Shape {
        what: &'static str,
        expected: String,
        found: String,
    },
    #[error("forward cache does not match the network: {0}")]
    StaleCache(String),
    #[error("invalid evolution policy: {0}")]
    InvalidPolicy(String),
    #[error("malformed topology text at line {line}: {reason}")]
    TopologyFormat { line: usize, reason: String },
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    // data
    #[error("bad IDX magic number: expected {expected:#010x}, found {found:#010x}")]
    MagicNumber { expected: u32, found: u32 },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("truncated file: {0}")]
    TruncatedFile(String),
    #[error("ragged row at line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-numeric value {value:?} at line {line}, column {column}")]
    NonNumeric {
        line: usize,
        column: usize,
        value: String,
    },
    #[error("empty file: {0}")]
    EmptyFile(String),
    #[error("label {label} out of range for {classes} classes")]
    OutOfRange { label: usize, classes: usize },
    #[error("too few samples ({samples}) for a split with test fraction {fraction}")]
    TooFewSamples { samples: usize, fraction: f64 },
    #[error("corrupt dataset cache: {0}")]
    CorruptCache(String),

    // scoring
    #[error("score weights must be nonnegative and sum to 1, got w_eff={w_eff}, w_acc={w_acc}")]
    WeightSum { w_eff: f64, w_acc: f64 },
    #[error("baseline {0} must be positive")]
    NonPositiveBaseline(&'static str),
    #[error("missing field {0}")]
    MissingField(String),

    // runner
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit status used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Context { source, .. } => source.exit_code(),
            Error::Numerical(_) => 4,
            Error::MagicNumber { .. }
            | Error::CountMismatch { .. }
            | Error::TruncatedFile(_)
            | Error::RaggedRow { .. }
            | Error::NonNumeric { .. }
            | Error::EmptyFile(_)
            | Error::OutOfRange { .. }
            | Error::TooFewSamples { .. }
            | Error::CorruptCache(_)
            | Error::MissingField(_)
            | Error::Checkpoint(_)
            | Error::TopologyFormat { .. }
            | Error::Io { .. } => 3,
            _ => 2,
        }
    }
}
