use thiserror::Error;

use crate::lp::LpError;

/// Errors raised by graph construction and the curvature toolchain.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("detailed balance violated between {x} and {y}: q(x,y)m(x) = {lhs}, q(y,x)m(y) = {rhs}")]
    NonReversible { x: String, y: String, lhs: f64, rhs: f64 },
    #[error("rate from {x} to {y} is positive but the reverse rate is zero")]
    AsymmetricSupport { x: String, y: String },
    #[error("rate from {x} to {y} must be positive and finite, got {rate}")]
    NonPositiveRate { x: String, y: String, rate: f64 },
    #[error("measure at {vertex} must be positive and finite, got {mass}")]
    NonPositiveMass { vertex: String, mass: f64 },
    #[error("graph is disconnected ({components} components)")]
    DisconnectedGraph { components: usize },
    #[error("graph has no edges")]
    NoEdges,
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("duplicate vertex {0:?}")]
    DuplicateVertex(String),
    #[error("duplicate rate entry from {x} to {y}")]
    DuplicateRate { x: String, y: String },
    #[error("self-loop at {0:?} is not allowed")]
    SelfLoop(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("endpoints must differ")]
    EqualEndpoints,
    #[error("construction violated its postcondition: {0}")]
    ConstructionViolation(String),
    #[error("total masses differ: {left} vs {right}")]
    MassMismatch { left: f64, right: f64 },
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("curvature is not certified non-negative (min kappa {min_kappa} at {x}-{y})")]
    CurvatureNotCertified { min_kappa: f64, x: String, y: String },
    #[error("exact Cheeger constant needs n <= {max}, got {n}")]
    TooLargeForExact { n: usize, max: usize },
    #[error("eigensolver failed: {0}")]
    EigensolverFailure(String),
    #[error("parse error at line {line}, {field}: {message}")]
    Parse { line: usize, field: String, message: String },
    #[error(transparent)]
    Lp(#[from] LpError),
}

pub type Result<T> = std::result::Result<T, Error>;
