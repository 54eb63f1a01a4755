//! Floating-point abstraction shared by the numeric kernels.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, NumAssignOps};

/// Real scalar usable by the linear-algebra, LP and heat kernels.
///
/// The associated tolerances are tuned to the precision of the type; the
/// graph-level modules fix `T = f64`.
pub trait Scalar:
    Float + FromPrimitive + NumAssignOps + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Entries below this magnitude are never used as simplex pivots.
    fn pivot_floor() -> Self;

    /// Feasibility / optimality tolerance of the simplex method.
    fn lp_tolerance() -> Self;

    /// Off-diagonal threshold at which Jacobi sweeps stop.
    fn jacobi_tolerance() -> Self;

    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }
}

impl Scalar for f64 {
    fn pivot_floor() -> Self {
        1e-13
    }
    fn lp_tolerance() -> Self {
        1e-11
    }
    fn jacobi_tolerance() -> Self {
        1e-15
    }
}

impl Scalar for f32 {
    fn pivot_floor() -> Self {
        1e-6
    }
    fn lp_tolerance() -> Self {
        1e-5
    }
    fn jacobi_tolerance() -> Self {
        1e-7
    }
}
