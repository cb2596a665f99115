//! The self-adjoint generator `B` of a unitary `A = e^{iB}`, recovered from
//! the eigenphases of `A_N`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::compression::{max_entry, CompressionSpaces, SpectralData};
use crate::embedding::embed_function;
use crate::error::{Error, Result};
use crate::linalg;
use crate::measure::AtomicMeasure;
use crate::models::{OperatorModel, Polynomial};
use crate::scalar::{arg, cis, cr, fmt17, Real, C};

/// Eigenphases `q_n` in `(-pi, pi]`, aligned with the eigenvectors of the
/// source spectral data.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseData<T: Real> {
    pub q: Vec<T>,
}

/// `q_n = Arg lambda_N(n)`.
pub fn log_spectrum<T: Real>(sd: &SpectralData<T>) -> Result<PhaseData<T>> {
    if (sd.r_a - T::one()).mag() > T::tol(1e-12) {
        return Err(Error::UnsupportedModel(format!(
            "log_spectrum needs a unitary model, got r_A = {}",
            sd.r_a.to_f()
        )));
    }
    Ok(PhaseData {
        q: sd.lambda.iter().map(|l| arg(*l)).collect(),
    })
}

/// `B_N` in `H_N` coordinates: `U diag(q) U^dagger`.
pub fn generator_matrix<T: Real>(pd: &PhaseData<T>, sd: &SpectralData<T>) -> DMatrix<C<T>> {
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(pd.q.len(), pd.q.iter().map(|q| cr(*q))));
    linalg::mul(&linalg::mul(&sd.u, &diag), &sd.u.adjoint())
}

/// Max-entry distance between `U diag(e^{iq}) U^dagger` and `A_N`.
pub fn exp_check<T: Real>(pd: &PhaseData<T>, sd: &SpectralData<T>, cs: &CompressionSpaces<T>) -> T {
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(pd.q.len(), pd.q.iter().map(|q| cis(*q))));
    let e = linalg::mul(&linalg::mul(&sd.u, &diag), &sd.u.adjoint());
    max_entry(&(e - &cs.a_n))
}

/// Mass of `mu_N` carried by phases with `|q| > bound`.
pub fn phase_mass_beyond<T: Real>(pd: &PhaseData<T>, sd: &SpectralData<T>, bound: T) -> T {
    pd.q
        .iter()
        .zip(&sd.xi)
        .filter(|(q, _)| q.mag() > bound)
        .fold(T::zero(), |a, (_, x)| a + *x * *x)
}

/// Atomic measure on `(-pi, pi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseMeasure<T: Real> {
    pub points: Vec<T>,
    pub masses: Vec<T>,
}

impl<T: Real> PhaseMeasure<T> {
    pub fn total(&self) -> T {
        self.masses.iter().fold(T::zero(), |a, m| a + *m)
    }

    /// CSV with header `q,mass`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("q,mass\n");
        for (q, m) in self.points.iter().zip(&self.masses) {
            writeln!(s, "{},{}", fmt17(*q), fmt17(*m)).unwrap();
        }
        s
    }
}

/// Image of `am` under `lambda -> Arg lambda`; coincident images merge.
pub fn pushforward_measure<T: Real>(am: &AtomicMeasure<T>) -> PhaseMeasure<T> {
    let mut pairs: Vec<(T, T)> = am.iter().map(|(p, m)| (arg(p), m)).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out = PhaseMeasure {
        points: Vec::new(),
        masses: Vec::new(),
    };
    for (q, m) in pairs {
        match out.points.last() {
            Some(last) if (q - *last).mag() <= T::tol(1e-12) => {
                *out.masses.last_mut().unwrap() += m;
            }
            _ => {
                out.points.push(q);
                out.masses.push(m);
            }
        }
    }
    out
}

/// `|B_N F_N(f_P) - P_{H_N} B P(A, A*) phi|_2` in eigencoordinates.
pub fn generator_defect<T: Real>(
    model: &OperatorModel<T>,
    cs: &CompressionSpaces<T>,
    sd: &SpectralData<T>,
    p: &Polynomial<T>,
) -> Result<T> {
    let b = model.generator().ok_or_else(|| {
        Error::UnsupportedModel(format!(
            "generator_defect needs an exp_selfadjoint model, got {}",
            model.kind().name()
        ))
    })?;
    if p.degree() > cs.n() {
        return Err(Error::Truncation {
            requested: p.degree(),
            horizon: cs.n(),
        });
    }
    let pd = log_spectrum(sd)?;
    let f = embed_function(&|z| p.eval(z), sd);
    let lhs = DVector::from_iterator(f.len(), f.coeffs.iter().zip(&pd.q).map(|(a, q)| *a * *q));
    let v = model.apply_polynomial(p)?;
    let bv = DVector::from_iterator(v.len(), v.iter().zip(b).map(|(x, bk)| *x * *bk));
    let rhs = linalg::ad_mul_vec(&sd.u, &cs.spaces.coords(&bv));
    Ok((lhs - rhs).norm())
}
