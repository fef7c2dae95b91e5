use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input contains no rows")]
    EmptyInput,

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("row {row}: negative count {value} in column {column}")]
    NegativeCount { row: usize, column: usize, value: i64 },

    #[error("row {row}: expected {expected} categories, found {found}")]
    MixedDimension { row: usize, expected: usize, found: usize },

    #[error("row {row}: group `{group}` already has a sample for population {population}")]
    DuplicateSample { row: usize, group: String, population: u8 },

    #[error("group `{group}` has no sample for population {missing}")]
    MissingMate { group: String, missing: u8 },

    #[error("duplicate group id `{0}`")]
    DuplicateGroup(String),

    #[error("a count vector needs at least 2 categories, got {0}")]
    TooFewCategories(usize),

    #[error("invalid probability vector: {0}")]
    InvalidProbVector(String),

    #[error("sample total is zero")]
    ZeroTotal,

    #[error("{}sample total {found} is below the required minimum {required}", group_prefix(.group))]
    SampleTooSmall {
        group: Option<String>,
        required: u64,
        found: u64,
    },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid number of bootstrap replicates {0}")]
    InvalidB(usize),

    #[error("invalid number of Monte Carlo replicates {0}")]
    InvalidReps(usize),

    #[error("exact enumeration needs {outcomes:.3e} outcome pairs, limit is {limit:.0e}")]
    TooManyOutcomes { outcomes: f64, limit: f64 },

    #[error("summed null variance is not positive")]
    ZeroVariance,

    #[error("value {0} is outside [0, 1]")]
    OutOfRange(f64),

    #[error("significance level {0} must lie in (0, 1)")]
    InvalidAlpha(f64),

    #[error("setting {setting} has no probability vectors for d = {d}")]
    UnsupportedDimension { setting: u8, d: usize },

    #[error("invalid simulation setting: {0}")]
    InvalidSetting(String),

    #[error("unknown table `{0}`")]
    UnknownTable(String),

    #[error("{0}")]
    Io(String),
}

fn group_prefix(group: &Option<String>) -> String {
    match group {
        Some(g) => format!("group `{g}`: "),
        None => String::new(),
    }
}

impl Error {
    /// Attach a group label to a [`Error::SampleTooSmall`] that lacks one.
    pub(crate) fn in_group(self, id: &str) -> Self {
        match self {
            Error::SampleTooSmall {
                group: None,
                required,
                found,
            } => Error::SampleTooSmall {
                group: Some(id.to_string()),
                required,
                found,
            },
            other => other,
        }
    }

    /// True for failures of an estimator's sample-size precondition.
    pub fn is_precondition(&self) -> bool {
        matches!(self, Error::SampleTooSmall { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
