use thiserror::Error;

/// Errors raised by the geometric and numerical routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("point ({0}, {1}) lies outside the chart domain")]
    Domain(f64, f64),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("integration error: {0}")]
    Integration(String),

    #[error("numeric error: {message} (residual {residual:e})")]
    Numeric { message: String, residual: f64 },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("certificate violated: {0}")]
    Certificate(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn numeric(message: impl Into<String>, residual: f64) -> Self {
        Error::Numeric { message: message.into(), residual }
    }

    /// Process exit code used by the command line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Certificate(_) => 3,
            _ => 1,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(..) => "domain",
            Error::Geometry(_) => "geometry",
            Error::Integration(_) => "integration",
            Error::Numeric { .. } => "numeric",
            Error::Resolution(_) => "resolution",
            Error::Precondition(_) => "precondition",
            Error::Degenerate(_) => "degenerate",
            Error::Topology(_) => "topology",
            Error::Certificate(_) => "certificate",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
