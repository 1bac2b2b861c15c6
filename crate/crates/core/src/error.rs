use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient points: need at least {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(
        "infeasible classing: {classes} classes requested but only {distinct} distinct values"
    )]
    InfeasibleClassing { classes: usize, distinct: usize },

    #[error("area `{0}` is not present in the ward lookup")]
    MissingLookup(String),

    #[error("ward sets differ: only in scores {only_scores:?}, only in historical ranks {only_historical:?}")]
    WardSetMismatch {
        only_scores: Vec<String>,
        only_historical: Vec<String>,
    },

    #[error("scenario uses frozen baseline bounds but no baseline bounds were recorded")]
    MissingBaseline,

    #[error("area `{area_id}` has no value for `{column}` (enable median imputation to fill it)")]
    MissingValue { area_id: String, column: String },

    #[error("{}", schema_message(.file, *.row, .column.as_deref(), .message))]
    Schema {
        file: PathBuf,
        row: Option<usize>,
        column: Option<String>,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("[{stage}] {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn schema(
        file: impl Into<PathBuf>,
        row: Option<usize>,
        column: Option<&str>,
        message: impl Into<String>,
    ) -> Self {
        Error::Schema {
            file: file.into(),
            row,
            column: column.map(str::to_owned),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Tags an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            already @ Error::Stage { .. } => already,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }
}

fn schema_message(
    file: &std::path::Path,
    row: Option<usize>,
    column: Option<&str>,
    message: &str,
) -> String {
    let mut out = file.display().to_string();
    if let Some(row) = row {
        out.push_str(&format!(", row {row}"));
    }
    if let Some(column) = column {
        out.push_str(&format!(", column `{column}`"));
    }
    out.push_str(": ");
    out.push_str(message);
    out
}
