use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input data violates a structural requirement (non-finite entry, shape mismatch).
    #[error("data error: {0}")]
    Data(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A decomposition did not converge.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// The requested number of factors exceeds the numerical rank of the panel.
    #[error("rank error: requested {requested} components but numerical rank is {rank}")]
    Rank { requested: usize, rank: usize },

    /// A least squares design does not have full column rank.
    #[error("singular design: {0}")]
    SingularDesign(String),

    /// Random projection draws kept producing singular designs.
    #[error("retry budget exhausted after {attempts} singular draws ({context})")]
    RetriesExhausted { attempts: usize, context: String },

    #[error("parse error: {0}")]
    Parse(String),

    /// A Monte Carlo replication failed; the run is aborted rather than
    /// dropping the replication.
    #[error("replication {rep} failed: {source}")]
    Replication { rep: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
