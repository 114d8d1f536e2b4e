use thiserror::Error;

/// Rejections from carpet validation and parsing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("need at least two columns, got {m}")]
    TooFewColumns { m: usize },
    #[error("column {j} has no cells")]
    EmptyColumn { j: usize },
    #[error("parameter {what} out of range in column {j} (cell {i:?}): {value}")]
    ParameterRange { what: &'static str, i: Option<usize>, j: usize, value: String },
    #[error("column heights do not fit in the unit interval: {detail}")]
    ColumnHeights { detail: String },
    #[error("columns {j} and {} overlap: {detail}", j + 1)]
    ColumnOverlap { j: usize, detail: String },
    #[error("cell widths in column {j}: {detail}")]
    CellWidths { j: usize, detail: String },
    #[error("cells {i} and {} of column {j} overlap: {detail}", i + 1)]
    CellOverlap { i: usize, j: usize, detail: String },
    #[error("probability p_{i}{j} = {value} is not positive")]
    NonPositiveProbability { i: usize, j: usize, value: f64 },
    #[error("probabilities sum to {sum}, not 1")]
    ProbabilitySum { sum: f64 },
    #[error("invalid grid carpet: {detail}")]
    BadGrid { detail: String },
    #[error("cannot parse carpet: {detail}")]
    Parse { detail: String },
}

impl SpecError {
    pub fn code(&self) -> &'static str {
        match self {
            SpecError::TooFewColumns { .. } => "too_few_columns",
            SpecError::EmptyColumn { .. } => "empty_column",
            SpecError::ParameterRange { .. } => "parameter_range",
            SpecError::ColumnHeights { .. } => "column_heights",
            SpecError::ColumnOverlap { .. } => "column_overlap",
            SpecError::CellWidths { .. } => "cell_widths",
            SpecError::CellOverlap { .. } => "cell_overlap",
            SpecError::NonPositiveProbability { .. } => "non_positive_probability",
            SpecError::ProbabilitySum { .. } => "probability_sum",
            SpecError::BadGrid { .. } => "bad_grid",
            SpecError::Parse { .. } => "parse",
        }
    }
}

/// Errors from everything past validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("budget of {budget} exceeded after {count} items")]
    BudgetExceeded { count: usize, budget: usize },
    #[error("invalid word `{word}`: {detail}")]
    Word { word: String, detail: String },
    #[error("precondition failed: {detail}")]
    Precondition { detail: String },
    #[error("no sign change on [{lo}, {hi}]: {detail}")]
    NoSignChange { lo: f64, hi: f64, detail: String },
    #[error("state explosion: {states} states at level {level}")]
    StateExplosion { states: usize, level: usize },
    #[error("numeric failure: {detail}")]
    Numeric { detail: String },
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Spec(e) => e.code(),
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::Word { .. } => "invalid_word",
            Error::Precondition { .. } => "precondition",
            Error::NoSignChange { .. } => "no_sign_change",
            Error::StateExplosion { .. } => "state_explosion",
            Error::Numeric { .. } => "numeric",
        }
    }

    /// Process exit code: 2 validation, 3 budget, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Spec(_) | Error::Word { .. } | Error::Precondition { .. } => 2,
            Error::BudgetExceeded { .. } | Error::StateExplosion { .. } => 3,
            Error::NoSignChange { .. } | Error::Numeric { .. } => 4,
        }
    }

    pub(crate) fn word(word: impl ToString, detail: impl Into<String>) -> Self {
        Error::Word { word: word.to_string(), detail: detail.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
