use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate (bank, period) key ({bank}, {period}) at rows {first_row} and {second_row}")]
    DuplicateKey {
        bank: String,
        period: String,
        first_row: usize,
        second_row: usize,
    },

    #[error("row {row}, column '{column}': cannot parse '{value}' as a finite number")]
    BadCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: unknown ownership label '{label}' (expected foreign, state or private)")]
    UnknownOwnership { row: usize, label: String },

    #[error("bank '{bank}' changes ownership label between rows")]
    InconsistentOwnership { bank: String },

    #[error("missing required column '{0}'")]
    MissingColumn(String),

    #[error("unknown variable '{0}'")]
    UnknownVariable(String),

    #[error("unsupported panel shape: {0}")]
    UnsupportedShape(String),

    #[error("variable '{0}' has zero variance")]
    ZeroVariance(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular design matrix (condition estimate {condition:.3e}); offending columns: {columns:?}")]
    SingularDesign { condition: f64, columns: Vec<String> },

    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("regressor '{0}' has no within-bank variation and cannot be identified under fixed effects")]
    NotIdentified(String),

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("under-identified: {instruments} instruments for {parameters} parameters")]
    UnderIdentified { instruments: usize, parameters: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("group '{group}' too small: {observations} observations for {parameters} parameters")]
    GroupTooSmall {
        group: String,
        observations: usize,
        parameters: usize,
    },

    #[error("missing ownership groups: {0:?}")]
    MissingGroups(Vec<String>),

    #[error("estimation result does not match the supplied data: {0}")]
    Mismatch(String),

    #[error("invalid simulation settings: {0}")]
    InvalidDgp(String),

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
