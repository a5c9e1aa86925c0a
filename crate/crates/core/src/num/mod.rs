//! Scalar-generic numeric kernels: planar vectors, bracketed root finding,
//! adaptive Gauss–Kronrod quadrature and an embedded Runge–Kutta stepper.

pub mod ode;
pub mod quad;
pub mod roots;
pub mod vec2;

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar accepted by the kernels (`f32` or `f64`).
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Send + Sync + 'static {}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into the scalar type.
#[inline]
pub fn lit<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("literal representable in scalar type")
}

/// Pairwise summation; deterministic and order-stable for a fixed input slice.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().fold(T::zero(), |acc, &v| acc + v);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
