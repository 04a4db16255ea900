//! One error type for every command, printed as a single machine-parsable line.

use std::fmt;
use std::io;
use std::path::Path;

use weakmap::codec::CodecError;
use weakmap::{ClassifyError, CorpusError, EvalError, LsaError, MapError, TextError};

/// Exit code for bad input, bad configuration or refused actions.
pub const EXIT_USER: i32 = 1;
/// Exit code for a broken internal invariant.
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    pub code: i32,
}

impl CliError {
    pub fn user(kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
            code: EXIT_USER,
        }
    }

    pub fn internal(kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
            code: EXIT_INTERNAL,
        }
    }

    pub fn io(path: &Path, e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::NotFound {
            Self::user("MissingFile", format!("missing file: {}", path.display()))
        } else {
            Self::user("IoError", format!("i/o error on {}: {e}", path.display()))
        }
    }

    /// `error kind=<Kind> msg="<message>"` with the message JSON-escaped onto one line.
    pub fn line(&self) -> String {
        format!(
            "error kind={} msg={}",
            self.kind,
            serde_json::Value::String(self.message.clone())
        )
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.line())
    }
}

impl std::error::Error for CliError {}

fn corpus_kind(e: &CorpusError) -> &'static str {
    match e {
        CorpusError::MissingFile(_) => "MissingFile",
        CorpusError::MalformedRow { .. } => "MalformedRow",
        CorpusError::MissingColumn { .. } => "MissingColumn",
        CorpusError::DuplicateId { .. } => "DuplicateId",
        CorpusError::DanglingMembership { .. } => "DanglingMembership",
        CorpusError::EmptyText { .. } => "EmptyText",
        CorpusError::UnknownCweId(_) => "UnknownCweId",
        CorpusError::Uncategorized(_) => "Uncategorized",
        CorpusError::Io { .. } => "IoError",
    }
}

fn text_kind(e: &TextError) -> (&'static str, i32) {
    match e {
        TextError::EmptyCorpus => ("EmptyCorpus", EXIT_USER),
        TextError::EmptyVocabulary { .. } => ("EmptyVocabulary", EXIT_USER),
        TextError::InvalidMinDf => ("InvalidConfig", EXIT_USER),
        TextError::DimensionMismatch { .. } => ("DimensionMismatch", EXIT_INTERNAL),
        TextError::Stopwords { .. } => ("IoError", EXIT_USER),
        TextError::MalformedVocabulary(_) => ("MalformedVocabulary", EXIT_USER),
    }
}

fn codec_kind(e: &CodecError) -> &'static str {
    match e {
        CodecError::VersionMismatch { .. } | CodecError::ScalarWidth { .. } => "VersionMismatch",
        CodecError::BadMagic { .. } | CodecError::Corrupt(_) => "CorruptArtifact",
        CodecError::Io(_) => "IoError",
    }
}

fn lsa_kind(e: &LsaError) -> (&'static str, i32) {
    match e {
        LsaError::RankTooLarge { .. } => ("RankTooLarge", EXIT_USER),
        LsaError::ZeroMatrix => ("ZeroMatrix", EXIT_USER),
        LsaError::DimensionMismatch { .. } => ("DimensionMismatch", EXIT_INTERNAL),
        LsaError::Codec(c) => (codec_kind(c), EXIT_USER),
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::user(corpus_kind(&e), e.to_string())
    }
}

impl From<TextError> for CliError {
    fn from(e: TextError) -> Self {
        let (kind, code) = text_kind(&e);
        CliError {
            kind,
            message: e.to_string(),
            code,
        }
    }
}

impl From<LsaError> for CliError {
    fn from(e: LsaError) -> Self {
        let (kind, code) = lsa_kind(&e);
        CliError {
            kind,
            message: e.to_string(),
            code,
        }
    }
}

impl From<CodecError> for CliError {
    fn from(e: CodecError) -> Self {
        CliError::user(codec_kind(&e), e.to_string())
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        let code = match e {
            ClassifyError::DimensionMismatch { .. } | ClassifyError::LengthMismatch { .. } => {
                EXIT_INTERNAL
            }
            _ => EXIT_USER,
        };
        CliError {
            kind: e.kind_name(),
            message: e.to_string(),
            code,
        }
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        let message = e.to_string();
        match e {
            MapError::Corpus(c) => c.into(),
            MapError::Text(t) => t.into(),
            MapError::Lsa(l) => l.into(),
            MapError::EmptyCatalog => CliError::user("EmptyCatalog", message),
            MapError::NoRequirements => CliError::user("NoRequirements", message),
            MapError::RefuseOverwrite(_) => CliError::user("RefuseOverwrite", message),
            MapError::SchemaMismatch { .. } => CliError::user("SchemaMismatch", message),
            MapError::MalformedRow { .. } => CliError::user("MalformedRow", message),
            MapError::Io { source, .. } if source.kind() == io::ErrorKind::NotFound => {
                CliError::user("MissingFile", message)
            }
            MapError::Io { .. } => CliError::user("IoError", message),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let message = e.to_string();
        match e {
            EvalError::Map(m) => m.into(),
            EvalError::TooFewExamples { .. } => CliError::user("TooFewExamples", message),
            EvalError::InvalidFraction(_) => CliError::user("InvalidConfig", message),
            EvalError::EmptyInput => CliError::user("EmptyInput", message),
            EvalError::EmptyGrid(_) => CliError::user("InvalidConfig", message),
            EvalError::LengthMismatch { .. } => CliError::internal("LengthMismatch", message),
            EvalError::ShapeMismatch { .. } => CliError::internal("ShapeMismatch", message),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_line_stays_on_one_line() {
        let e = CliError::user("MalformedRow", "row 3:\n\"bad\" quote");
        assert_eq!(
            e.line(),
            r#"error kind=MalformedRow msg="row 3:\n\"bad\" quote""#
        );
        assert!(!e.line().contains('\n'));
    }

    #[test]
    fn missing_file_names_the_path() {
        let e: CliError = MapError::from(CorpusError::MissingFile("reqs.csv".into())).into();
        assert_eq!((e.kind, e.code), ("MissingFile", EXIT_USER));
        assert!(e.message.contains("reqs.csv"));
    }
}
