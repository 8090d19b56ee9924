//! Std companion to `sbmtest-core`: file formats, edge-list ingestion,
//! Monte Carlo experiments and the `sbmtest` command line.

pub mod experiments;
pub mod ingest;
pub mod io;
pub mod stats;

use serde::Serialize;

/// Exit status of `sbmtest test` when the null is not rejected.
pub const EXIT_ACCEPT: i32 = 0;
/// Exit status of `sbmtest test` when the null is rejected.
pub const EXIT_REJECT: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] sbmtest_core::error::Error),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Usage(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Parse(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Parse(e.to_string())
        }
    }
}

impl From<toml::de::Error> for CliError {
    fn from(e: toml::de::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io(_) => "io",
            CliError::Parse(_) => "parse",
            CliError::Usage(_) => "usage",
        }
    }

    /// Process exit status:
    ///
    /// | code | meaning |
    /// |------|---------|
    /// | 2 | bad command line |
    /// | 4 | file could not be read or written |
    /// | 5 | malformed input file |
    /// | 6 | dimension mismatch between inputs |
    /// | 7 | invalid model, law, graph or parameter |
    /// | 8 | data cannot be calibrated (zero variance, too few pairs, clustering failed) |
    pub fn exit_code(&self) -> i32 {
        use sbmtest_core::error::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 4,
            CliError::Parse(_) => 5,
            CliError::Core(E::DimensionMismatch(_)) => 6,
            CliError::Core(E::ZeroVariance | E::InsufficientData(_) | E::Clustering(_)) => 8,
            CliError::Core(_) => 7,
        }
    }

    /// `{"error": {"kind": ..., "message": ...}}`
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
        }
        #[derive(Serialize)]
        struct Envelope<'a> {
            error: Body<'a>,
        }
        serde_json::to_string(&Envelope {
            error: Body {
                kind: self.kind(),
                message: self.to_string(),
            },
        })
        .expect("plain strings serialize")
    }
}
