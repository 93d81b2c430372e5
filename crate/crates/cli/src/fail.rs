use std::fmt;
use std::path::Path;

use cuneilab::augment::AugmentError;
use cuneilab::corpus::CorpusError;
use cuneilab::crf::CrfError;
use cuneilab::hmm::HmmError;
use cuneilab::interpret::InterpretError;
use cuneilab::metrics::MetricsError;
use cuneilab::rules::RuleError;

/// Process exit status for a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Usage = 1,
    Data = 2,
    External = 3,
}

/// An error that knows which exit code it maps to.
#[derive(Debug)]
pub struct Fail {
    pub exit: Exit,
    pub message: String,
}

impl fmt::Display for Fail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Fail {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    Fail {
        exit: Exit::Usage,
        message: message.into(),
    }
    .into()
}

pub fn external(message: impl Into<String>) -> anyhow::Error {
    Fail {
        exit: Exit::External,
        message: message.into(),
    }
    .into()
}

/// `file:line: message`, or `file: message` when no line is known.
pub fn data<E: LineOf + fmt::Display>(path: &Path, err: E) -> anyhow::Error {
    let message = match err.line_of() {
        Some(line) if line > 0 => {
            let text = err.to_string();
            let prefix = format!("line {line}: ");
            let text = text.strip_prefix(&prefix).unwrap_or(&text);
            format!("{}:{line}: {text}", path.display())
        }
        _ => format!("{}: {err}", path.display()),
    };
    Fail {
        exit: Exit::Data,
        message,
    }
    .into()
}

pub fn data_msg(path: &Path, message: impl fmt::Display) -> anyhow::Error {
    Fail {
        exit: Exit::Data,
        message: format!("{}: {message}", path.display()),
    }
    .into()
}

/// Line number carried by a library error, if any.
pub trait LineOf {
    fn line_of(&self) -> Option<usize>;
}

impl LineOf for CorpusError {
    fn line_of(&self) -> Option<usize> {
        self.line()
    }
}

impl LineOf for RuleError {
    fn line_of(&self) -> Option<usize> {
        match self {
            RuleError::MalformedLine { line, .. } | RuleError::UnknownRuleKind { line, .. } => {
                Some(*line)
            }
            _ => None,
        }
    }
}

impl LineOf for HmmError {
    fn line_of(&self) -> Option<usize> {
        match self {
            HmmError::Format { line, .. } => Some(*line),
            _ => None,
        }
    }
}

impl LineOf for CrfError {
    fn line_of(&self) -> Option<usize> {
        match self {
            CrfError::Format { line, .. } => Some(*line),
            _ => None,
        }
    }
}

impl LineOf for MetricsError {
    fn line_of(&self) -> Option<usize> {
        match self {
            MetricsError::MalformedLine { line, .. } | MetricsError::ScoreOutOfRange { line, .. } => {
                Some(*line)
            }
            _ => None,
        }
    }
}

impl LineOf for AugmentError {
    fn line_of(&self) -> Option<usize> {
        match self {
            AugmentError::MalformedLine { line, .. } => Some(*line),
            AugmentError::Corpus(e) => e.line(),
            _ => None,
        }
    }
}

impl LineOf for InterpretError {
    fn line_of(&self) -> Option<usize> {
        match self {
            InterpretError::MalformedLine { line, .. } => Some(*line),
            _ => None,
        }
    }
}

impl LineOf for std::io::Error {
    fn line_of(&self) -> Option<usize> {
        None
    }
}

impl LineOf for String {
    fn line_of(&self) -> Option<usize> {
        None
    }
}

/// Exit code for any error that reached `main`.
pub fn exit_code(err: &anyhow::Error) -> Exit {
    err.downcast_ref::<Fail>().map_or(Exit::Data, |f| f.exit)
}

pub fn data_at(path: &Path, line: usize, message: impl fmt::Display) -> anyhow::Error {
    Fail {
        exit: Exit::Data,
        message: format!("{}:{line}: {message}", path.display()),
    }
    .into()
}
