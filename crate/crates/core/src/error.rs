use thiserror::Error;

use crate::incentives::Irregularity;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} = {value} lies outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// The function has the same sign at both ends of the search interval.
    #[error("root not bracketed on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("bisection did not converge within {iterations} iterations (width {width})")]
    NoConvergence { iterations: usize, width: f64 },

    #[error("invalid school system: {0}")]
    InvalidSystem(String),

    #[error("{students} students exceed the brute-force limit of {limit}")]
    TooLarge { students: usize, limit: usize },

    #[error("degenerate tier at cutoff {cutoff}: cdf = {cdf}")]
    DegenerateTier { cutoff: f64, cdf: f64 },

    #[error("system is not regular: {0}")]
    NotRegular(Irregularity),

    #[error(
        "fee schedule is not incentive compatible at type {theta}: \
         tier {tier} gains {gain} by moving to tier {better}"
    )]
    FeeCheck {
        theta: f64,
        tier: usize,
        better: usize,
        gain: f64,
    },

    #[error("population file: {0}")]
    Population(String),

    #[error("output: {0}")]
    Output(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
