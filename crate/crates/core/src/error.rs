use std::path::PathBuf;

/// Errors produced while reading corpora, training, persisting or evaluating models.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed alignment token {token:?} in line {line:?}")]
    MalformedAlignment { line: String, token: String },

    #[error("alignment {en}-{fg} out of bounds for sentence lengths {en_len}/{fg_len}")]
    AlignmentOutOfBounds {
        en: usize,
        fg: usize,
        en_len: usize,
        fg_len: usize,
    },

    #[error("{path}:{line}: {source}")]
    AtLine {
        path: PathBuf,
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("line count mismatch in corpus {lang}: {detail}")]
    LineCountMismatch { lang: String, detail: String },

    #[error("corpus contains no retained English tokens")]
    EmptyCorpus,

    #[error("cannot build a noise table over an empty vocabulary")]
    EmptyVocabulary,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model file: {0}")]
    Format(String),

    #[error("word {0:?} is not in the vocabulary")]
    UnknownWord(String),

    #[error("sense {sense} of {word:?} is not active")]
    InactiveSense { word: String, sense: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{0}")]
    Data(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_line(path: impl Into<PathBuf>, line: usize, source: Error) -> Self {
        Error::AtLine {
            path: path.into(),
            line,
            source: Box::new(source),
        }
    }

    /// Process exit code: 1 usage, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Numerical(_) => 3,
            Error::AtLine { source, .. } => source.exit_code(),
            _ => 2,
        }
    }

    /// Short machine-readable category used in CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::MalformedAlignment { .. } | Error::AlignmentOutOfBounds { .. } => "alignment",
            Error::AtLine { source, .. } => source.kind(),
            Error::LineCountMismatch { .. } => "line-count",
            Error::EmptyCorpus | Error::EmptyVocabulary => "empty",
            Error::Config(_) => "usage",
            Error::Format(_) => "format",
            Error::UnknownWord(_) => "unknown-word",
            Error::InactiveSense { .. } => "inactive-sense",
            Error::Numerical(_) => "numerical",
            Error::Data(_) => "data",
        }
    }
}
