use std::io;

use thiserror::Error;

/// Errors produced anywhere in the alignment toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed header on line {line}: {reason}")]
    MalformedHeader { line: usize, reason: String },

    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },

    #[error("line {line}: non-finite or unparsable value {value:?}")]
    InvalidValue { line: usize, value: String },

    #[error("embedding space is empty")]
    EmptyVocabulary,

    #[error("duplicate word {0:?} in vocabulary")]
    DuplicateWord(String),

    #[error("matrix has {found} columns but vocabulary has {expected} words")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("dictionary line {line} has fewer than two tokens")]
    MalformedDictionaryLine { line: usize },

    #[error("{what}: dimension {left} does not match {right}")]
    DimMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("{what} index {index} out of range for {len} words")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("word {0:?} is not in the vocabulary")]
    OutOfVocabulary(String),

    #[error("dictionary is empty")]
    EmptyDictionary,

    #[error("zero-length column for word {word} (index {index}){}", round.map(|r| format!(" at round {r}")).unwrap_or_default())]
    ZeroColumn {
        index: usize,
        word: String,
        round: Option<usize>,
    },

    #[error("embedding vectors must be unit length: word index {index} has length {length}")]
    NotUnitLength { index: usize, length: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("synthetic dictionary is empty; the alignment has collapsed")]
    EmptySyntheticDictionary,

    #[error("malformed map file: {0}")]
    MalformedMap(String),

    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("pipeline stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    File {
        path: std::path::PathBuf,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Process exit code: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 1,
            Error::ZeroColumn { .. }
            | Error::Numerical(_)
            | Error::EmptySyntheticDictionary
            | Error::NotUnitLength { .. } => 3,
            Error::Stage { source, .. } | Error::File { source, .. } => source.exit_code(),
            _ => 2,
        }
    }

    /// Unwraps file and stage context down to the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } | Error::File { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn in_file(path: &std::path::Path) -> impl FnOnce(Error) -> Error + '_ {
        move |e| Error::File {
            path: path.to_path_buf(),
            source: Box::new(e),
        }
    }

    pub(crate) fn stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage {
            stage,
            source: Box::new(e),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
