use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The weights incident to `vertex` exceed its equilibrium mass.
    #[error("infeasible weights at vertex {vertex}: budget exceeded by {deficit:.3e}")]
    InfeasibleWeights { vertex: usize, deficit: f64 },

    #[error("chain is not reversible: detailed balance violated by {0:.3e}")]
    NotReversible(f64),

    /// Center-edge ratios differ inside a blade (1-based blade index).
    #[error("blade {blade} violates the ratio condition (q01/pi1 = {left:.6e}, q02/pi2 = {right:.6e})")]
    NotReducible { blade: usize, left: f64, right: f64 },

    #[error("wrong regime: {0}")]
    WrongRegime(String),

    /// A fixed friend-edge weight exceeds the smaller budget of its blade.
    #[error("fixed weight {value} on blade {blade} exceeds its limit {limit}")]
    InfeasibleFixedWeight { blade: usize, value: f64, limit: f64 },

    #[error("problem too large for exhaustive search (m = {0}); use the iterative minimizer")]
    TooLarge(usize),

    #[error("chain is reducible")]
    ReducibleChain,

    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
