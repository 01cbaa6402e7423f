//! Crate-wide error type.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// Malformed WAV container.
    WavFormat(String),
    /// Valid WAV but a format this crate does not accept (stereo, non-16-bit).
    UnsupportedWav(String),
    /// Degenerate signal input: empty, all-zero, zero power, rate mismatch.
    InvalidSignal(String),
    /// Codec misuse: bad dimensions, out-of-range index, invalid RVQ config.
    Codec(String),
    /// Metric preconditions: empty trace, too few events, zero-duration audio.
    Metrics(String),
    /// Trace file parse failure with 1-based line number.
    TraceParse { line: usize, message: String },
    /// Voice-activity / endpointing failures.
    Endpoint(String),
    /// No speech detected in the input.
    NoSpeech,
    /// Pipeline or CLI configuration problem.
    Config(String),
    /// A pipeline stage failed; carries the stage identity.
    Stage { stage: &'static str, message: String },
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::WavFormat(m) => write!(f, "malformed WAV: {m}"),
            Error::UnsupportedWav(m) => write!(f, "unsupported WAV format: {m}"),
            Error::InvalidSignal(m) => write!(f, "invalid signal: {m}"),
            Error::Codec(m) => write!(f, "codec error: {m}"),
            Error::Metrics(m) => write!(f, "metrics error: {m}"),
            Error::TraceParse { line, message } => {
                write!(f, "trace parse error at line {line}: {message}")
            }
            Error::Endpoint(m) => write!(f, "endpointing error: {m}"),
            Error::NoSpeech => write!(f, "no speech detected in input"),
            Error::Config(m) => write!(f, "config error: {m}"),
            Error::Stage { stage, message } => write!(f, "stage '{stage}' failed: {message}"),
            Error::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl Error {
    /// Wraps an error with the identity of the pipeline stage it came from.
    pub fn in_stage(stage: &'static str, e: Error) -> Error {
        Error::Stage { stage, message: e.to_string() }
    }
}
