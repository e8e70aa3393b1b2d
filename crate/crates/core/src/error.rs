use thiserror::Error;

use crate::plap::PTraceEntry;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state {0:?} has zero total weight")]
    IsolatedState(String),

    #[error("weight table is not symmetric: w({0},{1}) = {2} but w({1},{0}) = {3}")]
    AsymmetricWeights(String, String, f64, f64),

    #[error("kernel row of state {state:?} is not a probability vector (sum {sum})")]
    NotStochastic { state: String, sum: f64 },

    #[error("no strictly positive stationary measure: {0}")]
    NoStationaryMeasure(String),

    #[error("operation needs a metric on the state space")]
    MissingMetric,

    #[error("annulus around state {0:?} carries no mass")]
    EmptyAnnulus(String),

    #[error("domain is empty")]
    EmptyDomain,

    #[error("space fails detailed balance (worst residual {0:e})")]
    NotReversible(f64),

    #[error("problem too large: {0}")]
    ProblemTooLarge(String),

    #[error("boundary data mismatch: missing {missing:?}, extra {extra:?}")]
    BoundaryMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    #[error("domain has an empty m-boundary")]
    EmptyBoundary,

    #[error("minimal cuts are not nested at threshold {0}")]
    NonNestedCuts(f64),

    #[error("exponent must exceed 1, got {0}")]
    InvalidExponent(f64),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        trace: Vec<PTraceEntry>,
    },

    #[error("p-Laplacian iterate violates the max principle by {0:e}")]
    MaxPrinciple(f64),

    #[error("pair field is keyed outside the admissible support at ({0}, {1})")]
    SupportMismatch(String, String),

    #[error("median value property fails at state {0:?}")]
    MedianViolated(String),

    #[error("witness vanishes on the domain")]
    ZeroDenominator,

    #[error("shells do not exhaust the domain; unreachable states {0:?}")]
    Unbounded(Vec<String>),

    #[error("shell {0} has zero transition mass into the previous shell")]
    ZeroAlpha(usize),

    #[error("witness needs {needed} states but the truncation has {available}")]
    WitnessExceedsTruncation { needed: usize, available: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown state {0:?}")]
    UnknownState(String),
}
