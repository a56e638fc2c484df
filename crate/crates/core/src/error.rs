use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("invalid similarity spec ({a}, {b}) for {lattice}")]
    InvalidSpec { lattice: &'static str, a: i64, b: i64 },

    #[error("configuration is not clean: {0}")]
    NotClean(String),

    #[error("{what} out of range: {detail}")]
    OutOfRange { what: &'static str, detail: String },

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("infeasible rate split: description {index} has a*R* = {value} outside (0, {bound}]")]
    InfeasibleRate { index: usize, value: f64, bound: f64 },

    #[error("insufficient candidate tuples: {found} found, {needed} needed")]
    InsufficientCandidates { found: usize, needed: usize },

    #[error("product lattice index {n_pi} exceeds cap {cap}")]
    CapExceeded { n_pi: u64, cap: u64 },

    #[error("tuple is not in the image of the labeling function")]
    NotInImage,

    #[error("empty description subset")]
    EmptySubset,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
