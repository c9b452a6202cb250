use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A well-formed value that violates a declared width or range.
    #[error("line {line}: {source}")]
    Value { line: usize, source: addmul_core::Error },

    #[error(transparent)]
    Core(#[from] addmul_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("operands are {0} and {1} matrices; both must be the same kind")]
    KindMismatch(&'static str, &'static str),

    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }

    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File { path: path.into(), source: Box::new(self) }
    }

    /// Process exit status: 2 for malformed input, 3 for incompatible
    /// dimensions, 4 for values that exceed a declared width, 1 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Parse { .. } | Error::Usage(_) | Error::KindMismatch(..) => 2,
            Error::Value { source, .. } | Error::Core(source) => core_exit_code(source),
            Error::File { source, .. } => source.exit_code(),
            Error::Io(_) => 1,
        }
    }
}

fn core_exit_code(e: &addmul_core::Error) -> u8 {
    use addmul_core::Error as E;
    match e {
        E::DimensionMismatch(_) | E::LengthMismatch { .. } => 3,
        E::InvalidBits(_)
        | E::ValueOutOfRange { .. }
        | E::AccumulatorOverflow { .. }
        | E::ShiftTooLarge { .. }
        | E::ExponentOverflow(_)
        | E::InvalidMantissaBits(_)
        | E::UnnormalizedMantissa { .. } => 4,
        _ => 2,
    }
}
