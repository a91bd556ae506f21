//! Floating point scalar abstraction shared by every module.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar the kernel is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Absolute tolerance under which two points of the plane are identified.
    fn point_tol() -> Self;

    /// Converts an `f64` literal. Panics only for values the type cannot hold.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }
}

impl Scalar for f64 {
    #[inline]
    fn point_tol() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    #[inline]
    fn point_tol() -> Self {
        1e-5
    }
}

/// Complex number over a [`Scalar`].
pub type Cx<T> = Complex<T>;

#[inline]
pub fn cx<T: Scalar>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

/// `e^{iθ}`.
#[inline]
pub(crate) fn unit<T: Scalar>(theta: T) -> Cx<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Wraps an angle into `(-π, π]`.
pub(crate) fn wrap_angle<T: Scalar>(a: T) -> T {
    let two_pi = T::TAU();
    let mut r = a % two_pi;
    if r <= -T::PI() {
        r += two_pi;
    } else if r > T::PI() {
        r -= two_pi;
    }
    r
}

/// Euclidean distance from `z` to the closed segment `[a, b]`, together with
/// the parameter `u ∈ [0,1]` of the closest point.
pub(crate) fn segment_distance<T: Scalar>(a: Cx<T>, b: Cx<T>, z: Cx<T>) -> (T, T) {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == T::zero() {
        return ((z - a).norm(), T::zero());
    }
    let u = ((z - a) * d.conj()).re / len2;
    let u = u.max(T::zero()).min(T::one());
    ((a + d * u - z).norm(), u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        let pi = std::f64::consts::PI;
        assert!((wrap_angle(3.0 * pi) - pi).abs() < 1e-12);
        assert!((wrap_angle(-pi) - pi).abs() < 1e-12);
        assert!((wrap_angle(0.5) - 0.5).abs() < 1e-15);
        assert!((wrap_angle(-2.0 * pi - 0.25) + 0.25).abs() < 1e-12);
    }

    #[test]
    fn segment_distance_projects_and_clamps() {
        let (d, u) = segment_distance(cx(0.0, 0.0), cx(2.0, 0.0), cx(1.0, 1.0));
        assert_eq!((d, u), (1.0, 0.5));
        let (d, u) = segment_distance(cx(0.0, 0.0), cx(2.0, 0.0), cx(3.0, 0.0));
        assert_eq!((d, u), (1.0, 1.0));
    }

    #[test]
    fn f32_tolerance_is_coarser() {
        assert!(f32::point_tol() as f64 > f64::point_tol());
    }
}
