use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad class of a failure, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Numerical,
    Io,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Validation => "validation",
            ErrorCategory::Numerical => "numerical",
            ErrorCategory::Io => "io",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("need at least {min} treatments, got {got}")]
    TooFewTreatments { min: usize, got: usize },

    #[error("duplicate treatment label `{0}`")]
    DuplicateTreatment(String),

    #[error("empty treatment label at position {0}")]
    EmptyLabel(usize),

    #[error("unknown treatment `{0}`")]
    UnknownTreatment(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {what} at row {row}, column {col}")]
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
    },

    #[error("probability {value} out of [0, 1] at row {row}, rank {col}")]
    ProbabilityRange { row: usize, col: usize, value: f64 },

    #[error("rank probabilities for treatment `{treatment}` (row {row}) sum to {sum}, not 1")]
    RowSum {
        row: usize,
        treatment: String,
        sum: f64,
    },

    #[error("rank probability matrix is not doubly stochastic: column {col} sums to {sum}")]
    NotDoublyStochastic { col: usize, sum: f64 },

    #[error("score {value} for `{treatment}` out of [0, 1]")]
    ScoreRange { treatment: String, value: f64 },

    #[error("expected rank {value} for `{treatment}` out of [1, {n}]")]
    ExpectedRankRange {
        treatment: String,
        value: f64,
        n: usize,
    },

    #[error("covariance is not symmetric at ({row}, {col})")]
    AsymmetricCovariance { row: usize, col: usize },

    #[error("negative variance {value} on covariance diagonal at {index}")]
    NegativeVariance { index: usize, value: f64 },

    #[error("relative effects not antisymmetric for `{a}` vs `{b}`")]
    NotAntisymmetric { a: String, b: String },

    #[error("standard errors not symmetric for `{a}` vs `{b}`")]
    AsymmetricStandardError { a: String, b: String },

    #[error("non-positive standard error {value} for `{a}` vs `{b}`")]
    NonPositiveStandardError { a: String, b: String, value: f64 },

    #[error("degenerate covariance: contrast `{a}` vs `{b}` has variance {variance}")]
    DegenerateContrast { a: String, b: String, variance: f64 },

    #[error("covariance is not positive semidefinite (factorization failed after diagonal jitter up to {max_jitter:e})")]
    NotPositiveSemidefinite { max_jitter: f64 },

    #[error("draws matrix has no rows")]
    EmptyDraws,

    #[error("subset needs at least 2 treatments, got {0}")]
    SubsetTooSmall(usize),

    #[error("treatment `{0}` listed twice in subset")]
    DuplicateInSubset(String),

    #[error("{operation} needs joint information (pairwise effects or draws); a {source_kind} input cannot be re-ranked over subsets")]
    UnsupportedSource {
        operation: &'static str,
        source_kind: &'static str,
    },

    #[error("scores imply variance {variance} above the maximum {max} for {n} treatments; not a valid SUCRA/P-score vector")]
    InconsistentScores { variance: f64, max: f64, n: usize },

    #[error("POTH value {0} outside [0, 1] beyond rounding")]
    PothOutOfRange(f64),

    #[error("reference treatment `{0}` is not in the treatment set")]
    UnknownReference(String),

    #[error("{0}")]
    Parse(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("report is missing the {0} series")]
    MissingSeries(&'static str),

    #[error("empty corpus: no parseable networks")]
    EmptyCorpus,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io(_) => ErrorCategory::Io,
            Error::DegenerateContrast { .. }
            | Error::NotPositiveSemidefinite { .. }
            | Error::InconsistentScores { .. }
            | Error::PothOutOfRange(_)
            | Error::UndefinedCorrelation(_) => ErrorCategory::Numerical,
            _ => ErrorCategory::Validation,
        }
    }
}
