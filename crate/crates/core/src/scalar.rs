//! Scalar abstraction: the solver is generic over the floating-point type.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the game computations run on (`f32` or `f64`).
pub trait Scalar: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {}

impl<T> Scalar for T where T: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {}

/// Convert an `f64` constant (tolerances, literals) into the working scalar.
pub(crate) fn from_f64<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("f64 constant must be representable in the scalar type")
}

/// `2` in the working scalar.
pub(crate) fn two<T: Scalar>() -> T {
    T::one() + T::one()
}

/// `max(|a|, |b|, 1)`, the scale used for mixed absolute/relative comparisons.
pub(crate) fn comparison_scale<T: Scalar>(a: T, b: T) -> T {
    a.abs().max(b.abs()).max(T::one())
}
