//! Ollivier curvature on finite weighted reversible graphs.
//!
//! The crate computes curvature through small transport linear programs,
//! builds perfect coupling chains on `V × V`, evaluates heat semigroups by
//! uniformization and checks the resulting gradient, total variation,
//! isoperimetric and spectral estimates numerically.
//!
//! The numeric kernels ([`linalg`], [`lp`], [`heat`]) are generic over
//! [`Scalar`] (`f32` or `f64`); the aliases below fix them to `f64`.

pub mod coupling;
pub mod curvature;
pub mod error;
pub mod generate;
pub mod graph;
pub mod heat;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod report;
pub mod scalar;
pub mod spectral;
pub mod transport;
pub mod verify;

pub use coupling::{build_perfect_coupling, CouplingGraph, McEstimate};
pub use curvature::{cd_check, curvature_all, kappa, kappa_dual, CdVerdict, CurvatureMap, PairSelection};
pub use error::{Error, Result};
pub use generate::{generate, Family};
pub use graph::{build_graph, DistanceMatrix, Graph, RateEntry};
pub use io::GraphFile;
pub use lp::LpError;
pub use report::{CheckEntry, Status, VerificationReport};
pub use scalar::Scalar;
pub use spectral::{cheeger, spectrum, CheegerResult, Spectrum};
pub use transport::{MassProfile, PlanCorrection, TransportPlan};
pub use verify::{verify_inequalities, VerifyConfig};

pub type Matrix = linalg::Matrix<f64>;
pub type SymmetricEigen = linalg::SymmetricEigen<f64>;
pub type LinearProgram = lp::LinearProgram<f64>;
pub type LpSolution = lp::LpSolution<f64>;
pub type Generator = heat::Generator<f64>;
pub type HeatOperator = heat::HeatOperator<f64>;
pub use heat::BirthDeathSolution;
