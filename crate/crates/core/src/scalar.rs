//! Numeric scalar abstraction.
//!
//! Every exact probability computation in the crate is written against
//! [`Scalar`], so the same code runs in `f64` (the default, used by the CLI)
//! or in `f32` for quick low-precision experiments.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type usable as a probability mass.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the target type cannot hold it.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `base` widened to what this type can actually resolve.
    fn tol(base: f64) -> Self {
        let floor = Self::epsilon().as_f64() * 64.0;
        Self::lit(base.max(floor))
    }

    /// `x log2 x` with the convention `0 log 0 = 0`.
    fn xlog2x(self) -> Self {
        if self <= Self::zero() {
            Self::zero()
        } else {
            self * self.log2()
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Compensated (Neumaier) sum in index order. Keeps reductions
/// bit-reproducible and accurate over millions of small terms.
pub fn ordered_sum<T: Scalar>(xs: impl IntoIterator<Item = T>) -> T {
    let (mut sum, mut comp) = (T::zero(), T::zero());
    for x in xs {
        let t = sum + x;
        comp = comp + if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}
