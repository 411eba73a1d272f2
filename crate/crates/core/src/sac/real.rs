//! Scalar abstraction for the network math.
//!
//! Training runs at 32-bit for speed; gradient-fidelity tests run the same
//! code at 64-bit, where central finite differences are trustworthy.

use ndarray::ScalarOperand;
use std::fmt::{Debug, Display};
use std::ops::Neg;

/// Floating-point scalar the networks are generic over.
pub trait Real:
    ndarray::LinalgScalar + ScalarOperand + Neg<Output = Self> + PartialOrd + Display + Debug + Send + Sync
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn tanh(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn is_finite(self) -> bool;

    fn max_val(self, other: Self) -> Self {
        if self > other {
            self
        } else {
            other
        }
    }

    fn min_val(self, other: Self) -> Self {
        if self < other {
            self
        } else {
            other
        }
    }

    fn clamp_val(self, lo: Self, hi: Self) -> Self {
        self.max_val(lo).min_val(hi)
    }
}

impl Real for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn exp(self) -> Self {
        f32::exp(self)
    }
    fn ln(self) -> Self {
        f32::ln(self)
    }
    fn tanh(self) -> Self {
        f32::tanh(self)
    }
    fn sqrt(self) -> Self {
        f32::sqrt(self)
    }
    fn abs(self) -> Self {
        f32::abs(self)
    }
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}
