use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point scalar used by the solvers and the statistics layer: f32 or f64.
pub trait Scalar:
    Float + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + serde::Serialize + 'static
{
    /// Scaled residual a relaxation solve can reliably reach at this precision.
    const SOLVER_TOLERANCE: f64;

    fn of(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("finite f64 converts to scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    const SOLVER_TOLERANCE: f64 = 1e-5;
}

impl Scalar for f64 {
    const SOLVER_TOLERANCE: f64 = 1e-12;
}
