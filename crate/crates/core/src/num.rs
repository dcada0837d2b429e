//! Scalar abstraction: every numeric kernel in this crate is generic over a
//! floating-point type. `f64` is the default used by the CLI and the oracle;
//! `f32` is available for memory-bound workloads.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

/// Floating-point scalar: f32 or f64.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an f64 literal.
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Lossy conversion to f64 (for reporting and serialization).
    fn f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Dot product of two dense slices of equal length.
pub(crate) fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = F::zero();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

/// Squared Euclidean norm of a dense slice.
pub(crate) fn norm_sq<F: Scalar>(a: &[F]) -> F {
    let mut acc = F::zero();
    for x in a {
        acc += *x * *x;
    }
    acc
}
