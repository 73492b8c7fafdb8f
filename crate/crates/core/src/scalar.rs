//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All matrices are complex; the real type `T` selects the working precision.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point type usable as the base field of the solver.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + LowerExp + Debug + Send + Sync
{
    /// Smallest positive normal number.
    fn safe_min() -> Self;
}

impl Real for f32 {
    fn safe_min() -> Self {
        f32::MIN_POSITIVE
    }
}

impl Real for f64 {
    fn safe_min() -> Self {
        f64::MIN_POSITIVE
    }
}

/// Dense complex matrix over the real type `T`.
pub type CMat<T> = DMatrix<Complex<T>>;
/// Dense complex column vector over the real type `T`.
pub type CVec<T> = DVector<Complex<T>>;

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in the working precision")
}

/// Machine epsilon of `T`.
#[inline]
pub fn eps<T: Real>() -> T {
    T::default_epsilon()
}

/// `max(floor, k * eps)`: a tolerance that is `floor` in double precision and
/// degrades gracefully for coarser types.
#[inline]
pub fn tol<T: Real>(floor: f64, k: f64) -> T {
    let f = lit::<T>(floor);
    let e = eps::<T>() * lit(k);
    if f > e {
        f
    } else {
        e
    }
}

/// `|re| + |im|`, the cheap modulus used by the LAPACK-style kernels.
#[inline]
pub fn abs1<T: Real>(z: Complex<T>) -> T {
    z.re.abs() + z.im.abs()
}

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub fn creal<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Lifts a real matrix into the complex matrix type.
pub fn to_complex<T: Real>(m: &DMatrix<T>) -> CMat<T> {
    m.map(creal)
}

/// Casts a complex matrix between working precisions through `f64`.
pub fn cast_cmat<S: Real, T: Real>(m: &CMat<S>) -> CMat<T> {
    m.map(|z| {
        Complex::new(
            lit(z.re.to_f64().unwrap_or(f64::NAN)),
            lit(z.im.to_f64().unwrap_or(f64::NAN)),
        )
    })
}
