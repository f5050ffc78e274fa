// SPDX-License-Identifier: Apache-2.0

//! Floating-point scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point: f32 or f64.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Relative threshold below which a factorization pivot counts as zero.
    const PIVOT_TOL: f64;

    /// Lossless widening used for hashing and serialization.
    fn to_f64_lossless(self) -> f64;

    /// Conversion from `f64` constants (tolerances, generated entries).
    fn of(value: f64) -> Self;

    fn two() -> Self {
        Self::one() + Self::one()
    }
}

impl Scalar for f32 {
    const PIVOT_TOL: f64 = 1e-6;

    fn to_f64_lossless(self) -> f64 {
        self as f64
    }

    fn of(value: f64) -> Self {
        value as f32
    }
}

impl Scalar for f64 {
    const PIVOT_TOL: f64 = 1e-12;

    fn to_f64_lossless(self) -> f64 {
        self
    }

    fn of(value: f64) -> Self {
        value
    }
}
