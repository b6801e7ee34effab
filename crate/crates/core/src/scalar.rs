//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst};
use rustfft::FftNum;

/// Floating-point scalar usable throughout the crate (`f32` or `f64`).
pub trait Real: Float + FloatConst + FftNum + Default + Display + LowerExp + Debug {
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn count(n: usize) -> Self {
        Self::from_f64(n as f64).expect("count representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl<T> Real for T where T: Float + FloatConst + FftNum + Default + Display + LowerExp + Debug {}
