//! Scalar abstraction shared by every numerical module.
//!
//! All routines are generic over [`Real`], implemented for `f32` and `f64`.
//! Tolerances quoted in tests assume `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Floating point scalar usable by the spectral and dense linear algebra kernels.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + FftNum
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal; exact for `f64`, rounded for `f32`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("representable integer")
    }

    #[inline]
    fn from_i64_exact(n: i64) -> Self {
        Self::from_i64(n).expect("representable integer")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type C<T> = Complex<T>;

#[inline]
pub fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub fn czero<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn cone<T: Real>() -> C<T> {
    Complex::new(T::one(), T::zero())
}

#[inline]
pub fn ci<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

/// `e^{i theta}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> C<T> {
    let (s, co) = theta.sin_cos();
    Complex::new(co, s)
}

/// `τ = e^{2πi/3}`.
#[inline]
pub fn tau<T: Real>() -> C<T> {
    cis(T::lit(2.0) * T::PI() / T::lit(3.0))
}

/// Converts a complex value to double precision.
#[inline]
pub fn to_c64<T: Real>(z: C<T>) -> Complex<f64> {
    Complex::new(z.re.as_f64(), z.im.as_f64())
}

/// Converts a double precision complex value to `T`.
#[inline]
pub fn from_c64<T: Real>(z: Complex<f64>) -> C<T> {
    Complex::new(T::lit(z.re), T::lit(z.im))
}

/// Hermitian inner product `Σ conj(a_i) b_i`.
pub fn cdot<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter()
        .zip(b)
        .fold(czero(), |acc, (x, y)| acc + x.conj() * y)
}

/// Euclidean norm of a complex vector.
pub fn cnorm<T: Real>(a: &[C<T>]) -> T {
    a.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

/// Maximum modulus of a complex slice.
pub fn cmax_abs<T: Real>(a: &[C<T>]) -> T {
    a.iter().fold(T::zero(), |m, z| m.max(z.norm()))
}
