use thiserror::Error;

/// Crate-wide error type. `kind()` buckets variants for process exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    Measure(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain: {0}")]
    Domain(String),

    #[error("numeric: {0}")]
    Numeric(String),

    #[error("quadrature did not converge: requested {requested:e}, achieved {achieved:e}")]
    Quadrature { requested: f64, achieved: f64 },

    #[error("offset sweep did not stabilize: last iterates {prev} and {last}")]
    NonStabilizing { prev: f64, last: f64 },

    #[error("conditioning event has zero mass at m = {m}")]
    ZeroMass { m: f64 },

    #[error(
        "rejection sampler stalled at m = {m}: {attempts} draws without acceptance \
         (acceptance probability {acceptance:e})"
    )]
    RejectionStall { m: f64, attempts: u64, acceptance: f64 },

    #[error("chain stalled at admission {k}: {rounds} consecutive rejected rounds at m = {m}")]
    ChainStall { k: u64, m: f64, rounds: u64 },

    #[error("grid too coarse to separate known atoms: {atoms} atoms, {grid} cells")]
    Resolution { atoms: usize, grid: usize },

    #[error("limit is non-deterministic for this family and r; run classify for the full set")]
    NonDeterministic,

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numeric,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Measure(_) | Error::Config(_) | Error::Domain(_) | Error::NonDeterministic => {
                ErrorKind::Config
            }
            Error::Numeric(_)
            | Error::Quadrature { .. }
            | Error::NonStabilizing { .. }
            | Error::ZeroMass { .. }
            | Error::RejectionStall { .. }
            | Error::ChainStall { .. }
            | Error::Resolution { .. } => ErrorKind::Numeric,
            Error::Io(_) => ErrorKind::Io,
        }
    }

    /// Process exit code: 2 config, 3 numeric (0 success, 4 acceptance failure
    /// are assigned by the CLI itself).
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            ErrorKind::Config => 2,
            ErrorKind::Numeric => 3,
            ErrorKind::Io => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
