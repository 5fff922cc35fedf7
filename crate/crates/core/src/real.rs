//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar the solvers are generic over.
///
/// Implemented for `f32` and `f64`. Everything that needs a literal goes
/// through [`Real::lit`], so constants are written once as `f64` and rounded
/// to the working precision.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Machine epsilon name kept short for use in tolerances.
    const EPS: Self;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `1 / (4π)`, the Laplace kernel normalization.
    #[inline]
    fn inv_four_pi() -> Self {
        Self::one() / (Self::lit(4.0) * Self::PI())
    }
}

impl Real for f32 {
    const EPS: Self = f32::EPSILON;
}

impl Real for f64 {
    const EPS: Self = f64::EPSILON;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn generic_quarter_pi<T: Real>() -> T {
        T::PI() / T::lit(4.0)
    }

    #[test]
    fn literals_round_to_working_precision() {
        assert_eq!(f32::lit(0.1), 0.1f32);
        assert_eq!(f64::lit(0.1), 0.1f64);
        assert!((generic_quarter_pi::<f32>() - std::f32::consts::FRAC_PI_4).abs() < 1e-7);
        assert_eq!(f64::inv_four_pi(), 1.0 / (4.0 * std::f64::consts::PI));
    }
}
