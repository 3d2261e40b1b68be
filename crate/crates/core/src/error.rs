use thiserror::Error;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: missing required column `{column}`")]
    Schema { column: String },

    #[error("parse error at data row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("validation error at data row {row}: {message}")]
    Validation { row: usize, message: String },

    #[error("outcome label not derivable: neither os_p_value nor os_significant_reported present")]
    LabelUnderivable,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("odds ratio undefined: confusion table has a zero cell ({0})")]
    UndefinedOddsRatio(String),

    #[error("undefined rate: {0}")]
    UndefinedRate(String),

    #[error("no row has an out-of-bag vote; increase n_trees")]
    InsufficientTrees,

    #[error("in stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code class for the CLI: 2 schema, 3 validation,
    /// 4 degenerate analysis input, 5 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema { .. } => 2,
            Error::Parse { .. } | Error::Validation { .. } | Error::LabelUnderivable => 3,
            Error::DegenerateLabels(_)
            | Error::EmptyInput(_)
            | Error::UndefinedOddsRatio(_)
            | Error::UndefinedRate(_)
            | Error::InsufficientTrees => 4,
            Error::Stage { source, .. } => source.exit_code(),
            Error::Dimension(_) | Error::Io(_) => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
