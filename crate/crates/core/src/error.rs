use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} = {value} outside of {range}")]
    Domain {
        what: &'static str,
        value: f64,
        range: String,
    },

    #[error("degenerate equilibrium: alpha - (C - lambda)(p1 - p2) = 0")]
    DegenerateEquilibrium,

    #[error("critical state k* = {k_star} lies on the boundary of 0..={n}")]
    BoundaryCriticalState { k_star: usize, n: usize },

    #[error("chain is {found}, expected {expected}")]
    WrongChainClass {
        expected: &'static str,
        found: String,
    },

    #[error("rule is not noise-free (q(z) > 0 for some z <= 0)")]
    NotNoiseFree,

    #[error("distribution sums to {sum}, expected 1")]
    Unnormalized { sum: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("integration stopped at t = {time} with x = {state} before |dx/dt| < tolerance (|dx/dt| = {rate:e})")]
    HorizonExhausted { time: f64, state: f64, rate: f64 },
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
