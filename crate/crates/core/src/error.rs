use thiserror::Error;

/// Errors raised when a precondition of a solver or kernel routine is violated.
///
/// Infeasibility of a well-posed instance is not an error; it is reported
/// through [`crate::SolveResult::Infeasible`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// No SINR below the bracket cap satisfies the rate constraint.
    #[error("no SINR in [0, {upper}] meets the rate demand at blocklength {blocklength}")]
    UnboundedSinr { blocklength: f64, upper: f64 },

    /// The demanded rate is outside the range of the concave surrogate.
    #[error("demanded rate {rate} nats/channel-use is not achievable by the surrogate")]
    InfeasibleRate { rate: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The energy monotonicity condition fails for a user, so the
    /// deadline-saturating solution is not guaranteed optimal.
    #[error("monotonicity condition violated for user {user}: Q^-1(eps)/sqrt(N) = {ratio:.6} > {bound:.6}")]
    MonotonicityViolated { user: u8, ratio: f64, bound: f64 },

    #[error("invalid approximation context: {0}")]
    InvalidContext(String),
}

pub type Result<T> = std::result::Result<T, Error>;
