//! Scalar abstraction shared by every module.
//!
//! All numerics are written against [`Real`], which is implemented for `f32`
//! and `f64`. Complex quantities use [`C<T>`]. Absolute tolerances quoted in
//! `f64` terms go through [`Real::tol`], which never lets a threshold drop
//! below a few thousand ulps of the concrete type.

use nalgebra::{ComplexField, RealField};
use num_traits::ToPrimitive;

pub use nalgebra::Complex;

/// Complex number over the scalar `T`.
pub type C<T> = Complex<T>;

pub trait Real: RealField + Copy + Default + ToPrimitive + Send + Sync + 'static {
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::lit(n as f64)
    }

    #[inline]
    fn to_f(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `x` as a tolerance, floored at `4096 * epsilon`.
    #[inline]
    fn tol(x: f64) -> Self {
        let floor = Self::default_epsilon() * Self::lit(4096.0);
        let t = Self::lit(x);
        if t > floor {
            t
        } else {
            floor
        }
    }

    #[inline]
    fn mag(self) -> Self {
        <Self as ComplexField>::abs(self)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[inline]
pub fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub fn cr<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// `e^{i theta}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> C<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Principal argument in `(-pi, pi]`; `-pi` is folded onto `+pi`.
#[inline]
pub fn arg<T: Real>(z: C<T>) -> T {
    let a = z.im.atan2(z.re);
    if a <= -T::pi() {
        T::pi()
    } else {
        a
    }
}

#[inline]
pub fn modulus<T: Real>(z: C<T>) -> T {
    z.re.hypot(z.im)
}

/// Formats with 17 significant digits, the precision every CSV uses.
pub fn fmt17<T: Real>(x: T) -> String {
    format!("{:.16e}", x.to_f())
}
