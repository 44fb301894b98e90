use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

/// A single problem found while reading a configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty data: {0}")]
    EmptyData(String),

    #[error("weighted information matrix is singular; collinear columns {columns:?}")]
    SingularDesign { columns: Vec<usize> },

    #[error("fitted probability of the observed treatment is zero for subject {id} at visit {visit}")]
    ZeroProbability { id: usize, visit: usize },

    #[error("data shape violation: {0}")]
    Shape(String),

    #[error("truth oracle failure: {0}")]
    Oracle(String),

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("unsupported file version {found:?} (expected {expected:?})")]
    Version { found: String, expected: String },

    #[error("configuration has {} problem(s):\n{}", .0.len(), join_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn join_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}
