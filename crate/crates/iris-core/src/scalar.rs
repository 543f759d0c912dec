//! Scalar abstraction for the numeric kernels.
//!
//! All metric formulas, norm aggregation, decay mapping, and validation
//! statistics are written against [`Scalar`] so they run identically on
//! `f32` and `f64`. Data ingestion and reporting use the crate-level
//! [`crate::Real`] alias (`f64`).

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar usable throughout the numeric kernels.
pub trait Scalar:
    num_traits::Float + num_traits::FromPrimitive + Sum<Self> + Debug + Display + Send + Sync + 'static
{
    /// Lossless conversion from `f64` literals (hyperparameters, tolerances).
    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 must convert")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// L2 norm of a slice.
pub fn l2_norm<F: Scalar>(values: &[F]) -> F {
    values.iter().map(|v| *v * *v).sum::<F>().sqrt()
}

/// Arithmetic mean. Returns `None` on an empty slice.
pub fn mean<F: Scalar>(values: &[F]) -> Option<F> {
    if values.is_empty() {
        return None;
    }
    let n = F::from_usize(values.len())?;
    Some(values.iter().copied().sum::<F>() / n)
}

/// Sample variance (n-1 denominator). Returns `None` for fewer than 2 values.
pub fn sample_variance<F: Scalar>(values: &[F]) -> Option<F> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values)?;
    let n1 = F::from_usize(values.len() - 1)?;
    Some(values.iter().map(|v| (*v - m) * (*v - m)).sum::<F>() / n1)
}
