//! Complex matrix products routed through real products.
//!
//! nalgebra dispatches real `f32`/`f64` products to a blocked kernel but
//! multiplies complex matrices with a generic loop, which dominates the cost
//! of large compressions. Splitting into real and imaginary parts recovers
//! the fast path.

use nalgebra::{DMatrix, DVector};

use crate::scalar::{Real, C};

fn split<T: Real>(a: &DMatrix<C<T>>) -> (DMatrix<T>, DMatrix<T>) {
    (a.map(|z| z.re), a.map(|z| z.im))
}

fn join<T: Real>(re: DMatrix<T>, im: &DMatrix<T>) -> DMatrix<C<T>> {
    re.zip_map(im, |r, i| C::new(r, i))
}

/// `a * b`.
pub fn mul<T: Real>(a: &DMatrix<C<T>>, b: &DMatrix<C<T>>) -> DMatrix<C<T>> {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    join(re, &im)
}

/// `a^dagger * b`.
pub fn ad_mul<T: Real>(a: &DMatrix<C<T>>, b: &DMatrix<C<T>>) -> DMatrix<C<T>> {
    // `tr_mul` bypasses the blocked kernel, so transpose explicitly.
    let (ar, ai) = split(&a.transpose());
    let (br, bi) = split(b);
    let re = &ar * &br + &ai * &bi;
    let im = &ar * &bi - &ai * &br;
    join(re, &im)
}

/// `a * v`.
pub fn mul_vec<T: Real>(a: &DMatrix<C<T>>, v: &DVector<C<T>>) -> DVector<C<T>> {
    let m = DMatrix::from_column_slice(v.len(), 1, v.as_slice());
    let r = mul(a, &m);
    DVector::from_column_slice(r.as_slice())
}

/// `a^dagger * v`.
pub fn ad_mul_vec<T: Real>(a: &DMatrix<C<T>>, v: &DVector<C<T>>) -> DVector<C<T>> {
    let m = DMatrix::from_column_slice(v.len(), 1, v.as_slice());
    let r = ad_mul(a, &m);
    DVector::from_column_slice(r.as_slice())
}
