//! Scalar abstraction: every numeric kernel works for f32 or f64.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar for losses, gradients, weights and costs.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossless for f64, rounded for f32.
    fn from_f64_c(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any scalar")
    }

    fn to_f64_c(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Squared L2 norm.
pub fn norm_sq<S: Scalar>(v: &[S]) -> S {
    v.iter().map(|&x| x * x).sum()
}

/// L2 norm.
pub fn norm<S: Scalar>(v: &[S]) -> S {
    norm_sq(v).sqrt()
}

/// Dot product; panics on length mismatch.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// `y += alpha * x` elementwise.
pub fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_and_dot() {
        let v = [3.0f64, 4.0];
        assert_eq!(norm_sq(&v), 25.0);
        assert_eq!(norm(&v), 5.0);
        assert_eq!(dot(&v, &[1.0, 1.0]), 7.0);
    }

    #[test]
    fn axpy_accumulates() {
        let mut y = [1.0f32, 2.0];
        axpy(2.0, &[10.0, 20.0], &mut y);
        assert_eq!(y, [21.0, 42.0]);
    }
}
