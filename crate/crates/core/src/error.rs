use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("cannot compare values of different shapes: {left} vs {right}")]
    ShapeMismatch { left: String, right: String },

    #[error("a lexicographic tuple needs at least one component")]
    EmptyTuple,

    #[error("statistic has no value for outcome `{0}`")]
    MissingOutcome(String),

    #[error("unknown outcome `{0}`")]
    UnknownOutcome(String),

    #[error("invalid trial: {0}")]
    InvalidTrial(String),

    #[error("p-function value for `{label}` is {value}, outside [0, 1]")]
    ValueOutOfRange { label: String, value: String },

    #[error("scale factor {0} is below 1")]
    ScaleBelowOne(String),

    #[error("tie-breaking number r = {0} is outside [0, 1]")]
    ROutOfRange(String),

    #[error("epsilon {0} is outside [0, 1]")]
    EpsOutOfRange(String),

    #[error("grid size must be positive")]
    EmptyGrid,

    #[error("observations are not pairwise distinct: {0} occurs more than once")]
    DuplicateObservations(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("pooled spread is zero at the working precision")]
    DegenerateSpread,

    #[error("invalid cascade: {0}")]
    InvalidCascade(String),

    #[error("cascade contains `t`; use the Gaussian Monte Carlo calibration instead")]
    TCascadeNotExact,

    #[error("enumeration needs C({total}, {m}) = {count} subsets, above the cap of {cap}")]
    SizeLimit {
        total: usize,
        m: usize,
        count: String,
        cap: u64,
    },

    #[error("parse error in {field}{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Parse {
        field: String,
        line: Option<usize>,
        message: String,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            line: None,
            message: message.into(),
        }
    }
}
