//! The coefficient embedding `F_N(f)` and the three finite-stage norms.

use nalgebra::DVector;

use crate::compression::{operator_polynomial, CompressionSpaces, SpectralData};
use crate::error::{Error, Result};
use crate::measure::{BoxGrid, Rect, ReferenceMeasure, SpectrumEstimate};
use crate::models::{OperatorModel, Polynomial};
use crate::scalar::{modulus, Real, C};

/// Coefficients `a_n` with respect to the eigenbasis `u_N(n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HnVector<T: Real> {
    pub coeffs: DVector<C<T>>,
}

impl<T: Real> HnVector<T> {
    pub fn new(coeffs: DVector<C<T>>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(DVector::from_element(dim, C::default()))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn check_dim(&self, sd: &SpectralData<T>) -> Result<()> {
        if self.len() != sd.dim() {
            return Err(Error::Dimension {
                expected: sd.dim(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

impl<T: Real> std::ops::Sub for &HnVector<T> {
    type Output = HnVector<T>;
    fn sub(self, rhs: Self) -> HnVector<T> {
        HnVector::new(&self.coeffs - &rhs.coeffs)
    }
}

/// A closed subset of `S` given as a finite union of closed rectangles.
#[derive(Clone, Debug, PartialEq)]
pub enum Region<T: Real> {
    Whole,
    Rects(Vec<Rect<T>>),
}

impl<T: Real> Region<T> {
    pub fn contains(&self, z: C<T>) -> bool {
        match self {
            Region::Whole => true,
            Region::Rects(rs) => rs.iter().any(|r| r.contains_closed(z)),
        }
    }

    /// `R^n_eps` of a grid.
    pub fn strips(grid: &BoxGrid<T>, eps: T) -> Self {
        Region::Rects(grid.strips(eps))
    }

    /// Closed `eps`-neighbourhood of a union of boxes.
    pub fn fattened(boxes: &[Rect<T>], eps: T) -> Self {
        Region::Rects(boxes.iter().map(|b| b.fattened(eps)).collect())
    }
}

/// `a_n = xi_N(n) f(lambda_N(n))`.
pub fn embed_function<T: Real>(f: &dyn Fn(C<T>) -> C<T>, sd: &SpectralData<T>) -> HnVector<T> {
    HnVector::new(DVector::from_iterator(
        sd.dim(),
        sd.lambda.iter().zip(&sd.xi).map(|(l, x)| f(*l) * *x),
    ))
}

pub fn norm2<T: Real>(v: &HnVector<T>) -> T {
    v.coeffs.norm()
}

/// `sum xi_N(n) |a_n|`.
pub fn norm0<T: Real>(v: &HnVector<T>, sd: &SpectralData<T>) -> T {
    v.coeffs
        .iter()
        .zip(&sd.xi)
        .fold(T::zero(), |acc, (a, x)| acc + *x * modulus(*a))
}

/// `sup { |a_n| / xi_N(n) : lambda_N(n) in region }` with `0^{-1} = 0`.
/// Returns `+inf` when a coefficient is nonzero where the weight vanishes.
pub fn norm_inf<T: Real>(v: &HnVector<T>, sd: &SpectralData<T>, region: &Region<T>) -> T {
    let mut best = T::zero();
    for ((a, x), l) in v.coeffs.iter().zip(&sd.xi).zip(&sd.lambda) {
        if !region.contains(*l) {
            continue;
        }
        let m = modulus(*a);
        if *x == T::zero() {
            if m != T::zero() {
                return T::max_value().unwrap() * T::lit(2.0);
            }
        } else {
            best = best.max(m / *x);
        }
    }
    best
}

/// `norm_inf` over the spectrum estimate fattened by `2^{-k}` for each `k`.
pub fn norm_inf_table<T: Real>(
    v: &HnVector<T>,
    sd: &SpectralData<T>,
    spectrum: &SpectrumEstimate<T>,
    ks: std::ops::RangeInclusive<u32>,
) -> Vec<(T, T)> {
    let rects = spectrum.rects();
    ks.map(|k| {
        let eps = T::one() / T::lit(2f64.powi(k as i32));
        (eps, norm_inf(v, sd, &Region::fattened(&rects, eps)))
    })
    .collect()
}

/// `| |F_N(f)|_2^2 - int |f|^2 dmu |`.
pub fn isometry_defect<T: Real>(
    f: &dyn Fn(C<T>) -> C<T>,
    sd: &SpectralData<T>,
    reference: &ReferenceMeasure<T>,
) -> T {
    let lhs = norm2(&embed_function(f, sd)).powi(2);
    let rhs = reference.integrate(&|z| {
        let m = modulus(f(z));
        C::new(m * m, T::zero())
    });
    (lhs - rhs.re).mag()
}

/// `| |F_N(f)|_0 - int |f| dmu |`.
pub fn norm0_defect<T: Real>(
    f: &dyn Fn(C<T>) -> C<T>,
    sd: &SpectralData<T>,
    reference: &ReferenceMeasure<T>,
) -> T {
    let lhs = norm0(&embed_function(f, sd), sd);
    let rhs = reference.integrate(&|z| C::new(modulus(f(z)), T::zero()));
    (lhs - rhs.re).mag()
}

/// Distance between `F_N(f_P)` and `P(A_N, A*_N) phi` in eigencoordinates.
///
/// The right side is computed twice, once with the matrix polynomial and once
/// by projecting the ambient `P(A, A*) phi`; the larger deviation is
/// returned.
pub fn polynomial_consistency<T: Real>(
    model: &OperatorModel<T>,
    cs: &CompressionSpaces<T>,
    sd: &SpectralData<T>,
    p: &Polynomial<T>,
) -> Result<T> {
    let embedded = embed_function(&|z| p.eval(z), sd).coeffs;
    let matrix_route = sd.u.ad_mul(&(operator_polynomial(cs, p) * &cs.phi));
    let ambient = model.apply_polynomial(p)?;
    let ambient_route = sd.u.ad_mul(&cs.spaces.coords(&ambient));
    Ok((&embedded - matrix_route)
        .norm()
        .max((&embedded - ambient_route).norm()))
}

/// `sum { xi |a_n| : lambda_N(n) outside the closed spectrum boxes }`.
pub fn zero_good_defect<T: Real>(v: &HnVector<T>, sd: &SpectralData<T>, spectrum: &SpectrumEstimate<T>) -> T {
    let rects = spectrum.rects();
    v.coeffs
        .iter()
        .zip(&sd.xi)
        .zip(&sd.lambda)
        .filter(|(_, l)| !rects.iter().any(|r| r.contains_closed(**l)))
        .fold(T::zero(), |acc, ((a, x), _)| acc + *x * modulus(*a))
}
