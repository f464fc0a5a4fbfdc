//! Floating point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the hypergraph and solver code is generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + FromStr + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Relative slack in the violation test `r_i > κ d_i (1 + slack)`.
    const VIOLATION_SLACK: Self;
    /// Absolute tolerance for quantities that are sums and mins of small rationals.
    const EXACT_TOL: Self;

    /// Converts an `f64` literal. Every literal used by the crate is representable.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const VIOLATION_SLACK: Self = 1e-12;
    const EXACT_TOL: Self = 1e-12;
}

impl Scalar for f32 {
    const VIOLATION_SLACK: Self = 1e-6;
    const EXACT_TOL: Self = 1e-5;
}

/// `(z)_+`
#[inline]
pub(crate) fn pos<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z
    } else {
        T::zero()
    }
}

/// Derivative of the arc loss `z^p / p`, extended oddly: `sign(z) |z|^{p-1}`.
#[inline]
pub(crate) fn loss_slope<T: Scalar>(z: T, p: T) -> T {
    if p == T::lit(2.0) {
        return z;
    }
    if z > T::zero() {
        z.powf(p - T::one())
    } else if z < T::zero() {
        -(-z).powf(p - T::one())
    } else {
        T::zero()
    }
}
