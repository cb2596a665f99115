//! Exactly known operator models.
//!
//! Every model is a finite ambient coordinate space carrying an operator `A`
//! with `A*A = AA* = r I` (or a per-block version of it for direct sums), a
//! unit cyclic vector `phi`, and an exactness horizon: the largest `N` for
//! which all monomials `A^i (A*)^j phi` with `i, j <= N` are computed without
//! touching a truncation edge.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::measure::{AtomicMeasure, ReferenceMeasure};
use crate::scalar::{c, cis, cr, modulus, Real, C};

/// Linear action of `A` on ambient coordinates.
#[derive(Clone, Debug)]
pub enum Action<T: Real> {
    Diagonal(Vec<C<T>>),
    /// Bilateral shift on `e_{-L..=L}`, with `e_k` stored at index `k + L`.
    /// The last basis vector is sent to zero (truncation edge).
    Shift { half_width: usize },
    Scaled { factor: C<T>, inner: Box<Action<T>> },
    /// Orthogonal sum; each block is `(dimension, action)`.
    Blocks(Vec<(usize, Action<T>)>),
}

impl<T: Real> Action<T> {
    fn apply_into(&self, v: &[C<T>], out: &mut [C<T>], adjoint: bool) {
        match self {
            Action::Diagonal(d) => {
                for ((o, x), l) in out.iter_mut().zip(v).zip(d) {
                    *o = if adjoint { l.conj() * *x } else { *l * *x };
                }
            }
            Action::Shift { .. } => {
                let n = v.len();
                out.iter_mut().for_each(|o| *o = C::default());
                if adjoint {
                    out[..n - 1].copy_from_slice(&v[1..]);
                } else {
                    out[1..].copy_from_slice(&v[..n - 1]);
                }
            }
            Action::Scaled { factor, inner } => {
                inner.apply_into(v, out, adjoint);
                let f = if adjoint { factor.conj() } else { *factor };
                out.iter_mut().for_each(|o| *o *= f);
            }
            Action::Blocks(blocks) => {
                let mut off = 0;
                for (dim, a) in blocks {
                    a.apply_into(&v[off..off + dim], &mut out[off..off + dim], adjoint);
                    off += dim;
                }
            }
        }
    }

    fn scaled(self, q: C<T>) -> Self {
        match self {
            Action::Scaled { factor, inner } => Action::Scaled {
                factor: factor * q,
                inner,
            },
            other => Action::Scaled {
                factor: q,
                inner: Box::new(other),
            },
        }
    }
}

/// The `r` in `A*A = AA* = r I`.
#[derive(Clone, Debug, PartialEq)]
pub enum Scaling<T: Real> {
    Uniform(T),
    /// Direct sums: one `r` per block, no global constant.
    PerBlock(Vec<T>),
}

/// Construction recipe, kept for serialization and for operations that only
/// make sense on one family.
#[derive(Clone, Debug)]
pub enum ModelKind<T: Real> {
    DiagUnitary { phases: Vec<C<T>>, weights: Vec<T> },
    BilateralShift { half_width: usize },
    ScaledUnitary { q: C<T>, base: Box<ModelKind<T>> },
    ExpSelfAdjoint { b_values: Vec<T>, scale: T },
    DirectSum(Box<ModelKind<T>>, Box<ModelKind<T>>),
}

impl<T: Real> ModelKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::DiagUnitary { .. } => "diag_unitary",
            ModelKind::BilateralShift { .. } => "bilateral_shift",
            ModelKind::ScaledUnitary { .. } => "scaled_unitary",
            ModelKind::ExpSelfAdjoint { .. } => "exp_selfadjoint",
            ModelKind::DirectSum(..) => "direct_sum",
        }
    }

    pub fn parameters(&self) -> Value {
        let cplx = |z: &C<T>| json!([z.re.to_f(), z.im.to_f()]);
        match self {
            ModelKind::DiagUnitary { phases, weights } => json!({
                "phases": phases.iter().map(cplx).collect::<Vec<_>>(),
                "weights": weights.iter().map(|w| w.to_f()).collect::<Vec<_>>(),
            }),
            ModelKind::BilateralShift { half_width } => json!({ "half_width": half_width }),
            ModelKind::ScaledUnitary { q, base } => json!({
                "q": cplx(q),
                "base": { "kind": base.name(), "parameters": base.parameters() },
            }),
            ModelKind::ExpSelfAdjoint { b_values, scale } => json!({
                "b_values": b_values.iter().map(|b| b.to_f()).collect::<Vec<_>>(),
                "scale": scale.to_f(),
            }),
            ModelKind::DirectSum(a, b) => json!({
                "summands": [
                    { "kind": a.name(), "parameters": a.parameters() },
                    { "kind": b.name(), "parameters": b.parameters() },
                ]
            }),
        }
    }
}

/// A Hilbert space with operator, adjoint and cyclic vector.
///
/// Immutable after construction.
#[derive(Clone, Debug)]
pub struct OperatorModel<T: Real> {
    kind: ModelKind<T>,
    action: Action<T>,
    phi: DVector<C<T>>,
    scaling: Scaling<T>,
    op_norm: T,
    m: u32,
    max_exact_n: Option<usize>,
    reference: Option<ReferenceMeasure<T>>,
    generator: Option<Vec<T>>,
}

impl<T: Real> OperatorModel<T> {
    pub fn kind(&self) -> &ModelKind<T> {
        &self.kind
    }

    pub fn ambient_dim(&self) -> usize {
        self.phi.len()
    }

    pub fn phi(&self) -> &DVector<C<T>> {
        &self.phi
    }

    pub fn scaling(&self) -> &Scaling<T> {
        &self.scaling
    }

    /// Global `r_A`, or `None` for per-block models.
    pub fn r_a(&self) -> Option<T> {
        match &self.scaling {
            Scaling::Uniform(r) => Some(*r),
            Scaling::PerBlock(_) => None,
        }
    }

    pub fn op_norm(&self) -> T {
        self.op_norm
    }

    /// Half-side of the square `S = [-M, M]^2`.
    pub fn m(&self) -> u32 {
        self.m
    }

    /// `None` means every monomial is exact (the ambient space is already the
    /// whole space).
    pub fn max_exact_n(&self) -> Option<usize> {
        self.max_exact_n
    }

    pub fn reference_measure(&self) -> Option<&ReferenceMeasure<T>> {
        self.reference.as_ref()
    }

    /// Diagonal of the generator `B` with `A = e^{iB}`, for self-adjoint
    /// models.
    pub fn generator(&self) -> Option<&[T]> {
        self.generator.as_deref()
    }

    pub fn apply_a(&self, v: &DVector<C<T>>) -> DVector<C<T>> {
        let mut out = DVector::from_element(v.len(), C::default());
        self.action.apply_into(v.as_slice(), out.as_mut_slice(), false);
        out
    }

    pub fn apply_a_star(&self, v: &DVector<C<T>>) -> DVector<C<T>> {
        let mut out = DVector::from_element(v.len(), C::default());
        self.action.apply_into(v.as_slice(), out.as_mut_slice(), true);
        out
    }

    fn check_horizon(&self, degree: usize) -> Result<()> {
        match self.max_exact_n {
            Some(h) if degree > h => Err(Error::Truncation {
                requested: degree,
                horizon: h,
            }),
            _ => Ok(()),
        }
    }

    /// `A^i (A*)^j phi`, applying `A*` first.
    pub fn monomial(&self, i: usize, j: usize) -> Result<DVector<C<T>>> {
        self.check_horizon(i.max(j))?;
        let mut v = self.phi.clone();
        for _ in 0..j {
            v = self.apply_a_star(&v);
        }
        for _ in 0..i {
            v = self.apply_a(&v);
        }
        Ok(v)
    }

    /// `(A*)^j A^i phi`, the same monomial evaluated in the other order.
    pub fn monomial_reversed(&self, i: usize, j: usize) -> Result<DVector<C<T>>> {
        self.check_horizon(i.max(j))?;
        let mut v = self.phi.clone();
        for _ in 0..i {
            v = self.apply_a(&v);
        }
        for _ in 0..j {
            v = self.apply_a_star(&v);
        }
        Ok(v)
    }

    /// `P(A, A*) phi`.
    pub fn apply_polynomial(&self, p: &Polynomial<T>) -> Result<DVector<C<T>>> {
        self.check_horizon(p.degree())?;
        let dim = self.ambient_dim();
        let mut acc = DVector::from_element(dim, C::default());
        let max_i = p.terms().map(|((i, _), _)| i).max().unwrap_or(0);
        let max_j = p.terms().map(|((_, j), _)| j).max().unwrap_or(0);
        let mut column = self.phi.clone();
        for j in 0..=max_j {
            if p.terms().any(|((_, jj), _)| jj == j) {
                let mut v = column.clone();
                for i in 0..=max_i {
                    let coef = p.coeff(i, j);
                    if coef != C::default() {
                        acc.axpy(coef, &v, cr(T::one()));
                    }
                    if i < max_i {
                        v = self.apply_a(&v);
                    }
                }
            }
            if j < max_j {
                column = self.apply_a_star(&column);
            }
        }
        Ok(acc)
    }

    pub fn to_json(&self) -> Value {
        let r = match &self.scaling {
            Scaling::Uniform(r) => json!(r.to_f()),
            Scaling::PerBlock(rs) => json!(rs.iter().map(|r| r.to_f()).collect::<Vec<_>>()),
        };
        json!({
            "kind": self.kind.name(),
            "parameters": self.kind.parameters(),
            "ambient_dim": self.ambient_dim(),
            "r_A": r,
            "M": self.m,
        })
    }
}

fn side_length<T: Real>(op_norm: T, r: T) -> u32 {
    let bound = op_norm.max(r.sqrt());
    bound.floor().to_f() as u32 + 1
}

/// Diagonal unitary with the given eigenphases; `phi_k = sqrt(weight_k)`.
pub fn make_diag_unitary<T: Real>(phases: &[C<T>], weights: &[T]) -> Result<OperatorModel<T>> {
    if phases.is_empty() || phases.len() != weights.len() {
        return Err(Error::InvalidParameter(format!(
            "need matching non-empty phase/weight lists, got {} and {}",
            phases.len(),
            weights.len()
        )));
    }
    for z in phases {
        if (modulus(*z) - T::one()).mag() > T::tol(1e-9) {
            return Err(Error::InvalidParameter(format!(
                "eigenphase {:?} is not on the unit circle",
                (z.re.to_f(), z.im.to_f())
            )));
        }
    }
    if let Some(k) = weights.iter().position(|w| *w <= T::zero()) {
        return Err(Error::NonCyclic(format!("weight {k} is not positive")));
    }
    let total = weights.iter().fold(T::zero(), |a, w| a + *w);
    if (total - T::one()).mag() > T::tol(1e-9) {
        return Err(Error::InvalidParameter(format!(
            "weights sum to {}, not 1",
            total.to_f()
        )));
    }
    for a in 0..phases.len() {
        for b in a + 1..phases.len() {
            if modulus(phases[a] - phases[b]) <= T::tol(1e-12) {
                return Err(Error::NonCyclic(format!("phases {a} and {b} coincide")));
            }
        }
    }
    let phi = DVector::from_iterator(weights.len(), weights.iter().map(|w| cr(w.sqrt())));
    Ok(OperatorModel {
        kind: ModelKind::DiagUnitary {
            phases: phases.to_vec(),
            weights: weights.to_vec(),
        },
        action: Action::Diagonal(phases.to_vec()),
        phi,
        scaling: Scaling::Uniform(T::one()),
        op_norm: T::one(),
        m: side_length(T::one(), T::one()),
        max_exact_n: None,
        reference: Some(ReferenceMeasure::Atomic(AtomicMeasure::new(
            phases.to_vec(),
            weights.to_vec(),
        ))),
        generator: None,
    })
}

/// Bilateral shift on `e_{-L..=L}` with cyclic vector `e_0`.
pub fn make_bilateral_shift<T: Real>(half_width: usize) -> Result<OperatorModel<T>> {
    if half_width < 1 {
        return Err(Error::InvalidParameter(
            "bilateral shift needs half width L >= 1".into(),
        ));
    }
    let dim = 2 * half_width + 1;
    let mut phi = DVector::from_element(dim, C::default());
    phi[half_width] = cr(T::one());
    Ok(OperatorModel {
        kind: ModelKind::BilateralShift { half_width },
        action: Action::Shift { half_width },
        phi,
        scaling: Scaling::Uniform(T::one()),
        op_norm: T::one(),
        m: side_length(T::one(), T::one()),
        max_exact_n: Some((half_width - 1) / 2),
        reference: Some(ReferenceMeasure::UniformCircle { radius: T::one() }),
        generator: None,
    })
}

/// `q` times a unitary model.
pub fn make_scaled_unitary<T: Real>(q: C<T>, base: &OperatorModel<T>) -> Result<OperatorModel<T>> {
    let unit = matches!(base.scaling, Scaling::Uniform(r) if (r - T::one()).mag() <= T::tol(1e-12));
    if !unit {
        return Err(Error::UnsupportedModel(
            "scaling requires a unitary base model (r_A = 1)".into(),
        ));
    }
    let aq = modulus(q);
    if aq == T::zero() {
        return Err(Error::InvalidParameter("scaling factor q must be nonzero".into()));
    }
    if q == cr(T::one()) {
        return Ok(base.clone());
    }
    let r = aq * aq;
    let op_norm = aq * base.op_norm;
    Ok(OperatorModel {
        kind: ModelKind::ScaledUnitary {
            q,
            base: Box::new(base.kind.clone()),
        },
        action: base.action.clone().scaled(q),
        phi: base.phi.clone(),
        scaling: Scaling::Uniform(r),
        op_norm,
        m: side_length(op_norm, r),
        max_exact_n: base.max_exact_n,
        reference: base.reference.as_ref().map(|m| m.scaled(q)),
        generator: None,
    })
}

/// `A = diag(e^{i s b_k})` with uniform `phi`, where `s` is the rescaling
/// freedom of the generator. The bound `|s b_k| < 1/9` is checked after
/// scaling.
pub fn make_exp_selfadjoint<T: Real>(b_values: &[T], scale: T) -> Result<OperatorModel<T>> {
    if b_values.is_empty() {
        return Err(Error::InvalidParameter("empty generator".into()));
    }
    if scale <= T::zero() {
        return Err(Error::InvalidParameter("scale must be positive".into()));
    }
    let ninth = T::one() / T::lit(9.0);
    let b: Vec<T> = b_values.iter().map(|x| *x * scale).collect();
    for (k, x) in b.iter().enumerate() {
        if x.mag() >= ninth {
            return Err(Error::NormBound { value: x.mag().to_f() });
        }
        if *x == T::zero() {
            return Err(Error::KernelVector { index: k });
        }
    }
    for a in 0..b.len() {
        for bb in a + 1..b.len() {
            if (b[a] - b[bb]).mag() <= T::tol(1e-12) {
                return Err(Error::NonCyclic(format!(
                    "generator values {a} and {bb} coincide"
                )));
            }
        }
    }
    let n = b.len();
    let phases: Vec<C<T>> = b.iter().map(|x| cis(*x)).collect();
    let w = T::one() / T::from_count(n);
    let phi = DVector::from_element(n, cr(w.sqrt()));
    Ok(OperatorModel {
        kind: ModelKind::ExpSelfAdjoint {
            b_values: b_values.to_vec(),
            scale,
        },
        action: Action::Diagonal(phases.clone()),
        phi,
        scaling: Scaling::Uniform(T::one()),
        op_norm: T::one(),
        m: side_length(T::one(), T::one()),
        max_exact_n: None,
        reference: Some(ReferenceMeasure::Atomic(AtomicMeasure::new(
            phases,
            vec![w; n],
        ))),
        generator: Some(b),
    })
}

/// Orthogonal sum of two scaled-unitary models with distinct scaling
/// constants. The result has no global `r_A`.
pub fn make_direct_sum<T: Real>(m1: &OperatorModel<T>, m2: &OperatorModel<T>) -> Result<OperatorModel<T>> {
    let (r1, r2) = match (&m1.scaling, &m2.scaling) {
        (Scaling::Uniform(a), Scaling::Uniform(b)) => (*a, *b),
        _ => {
            return Err(Error::UnsupportedModel(
                "direct sums are only built from scaled-unitary summands".into(),
            ))
        }
    };
    if (r1 - r2).mag() <= T::tol(1e-12) {
        return Err(Error::InvalidParameter(
            "direct sum requires distinct scaling constants".into(),
        ));
    }
    let (d1, d2) = (m1.ambient_dim(), m2.ambient_dim());
    let half = (T::one() / T::lit(2.0)).sqrt();
    let phi = DVector::from_iterator(
        d1 + d2,
        m1.phi.iter().chain(m2.phi.iter()).map(|z| z.scale(half)),
    );
    let horizon = match (m1.max_exact_n, m2.max_exact_n) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let reference = match (&m1.reference, &m2.reference) {
        (Some(ReferenceMeasure::Atomic(a)), Some(ReferenceMeasure::Atomic(b))) => {
            let h = T::lit(0.5);
            let points = a.points.iter().chain(&b.points).copied().collect();
            let masses = a.masses.iter().chain(&b.masses).map(|m| *m * h).collect();
            Some(ReferenceMeasure::Atomic(AtomicMeasure::new(points, masses)))
        }
        _ => None,
    };
    let op_norm = m1.op_norm.max(m2.op_norm);
    Ok(OperatorModel {
        kind: ModelKind::DirectSum(Box::new(m1.kind.clone()), Box::new(m2.kind.clone())),
        action: Action::Blocks(vec![(d1, m1.action.clone()), (d2, m2.action.clone())]),
        phi,
        scaling: Scaling::PerBlock(vec![r1, r2]),
        op_norm,
        m: side_length(op_norm, r1.max(r2)),
        max_exact_n: horizon,
        reference,
        generator: None,
    })
}

/// Finitely supported polynomial `sum c_ij X^i Y^j`, read as
/// `f_P(z) = P(z, conj z)` or as `P(A, A*)`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial<T: Real> {
    coeffs: BTreeMap<(usize, usize), C<T>>,
}

impl<T: Real> Polynomial<T> {
    pub fn zero() -> Self {
        Self {
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(v: C<T>) -> Self {
        Self::monomial(0, 0, v)
    }

    pub fn one() -> Self {
        Self::constant(cr(T::one()))
    }

    /// `X`, i.e. `A` or `z`.
    pub fn x() -> Self {
        Self::monomial(1, 0, cr(T::one()))
    }

    /// `Y`, i.e. `A*` or `conj z`.
    pub fn y() -> Self {
        Self::monomial(0, 1, cr(T::one()))
    }

    pub fn xy() -> Self {
        Self::monomial(1, 1, cr(T::one()))
    }

    pub fn monomial(i: usize, j: usize, v: C<T>) -> Self {
        let mut p = Self::zero();
        p.add_term(i, j, v);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = ((usize, usize), C<T>)>) -> Self {
        let mut p = Self::zero();
        for ((i, j), v) in terms {
            p.add_term(i, j, v);
        }
        p
    }

    pub fn add_term(&mut self, i: usize, j: usize, v: C<T>) {
        let e = self.coeffs.entry((i, j)).or_default();
        *e += v;
        if *e == C::default() {
            self.coeffs.remove(&(i, j));
        }
    }

    /// Dense polynomial with every `c_ij`, `i, j <= degree`, drawn uniformly
    /// from the unit square.
    pub fn random<R: Rng + ?Sized>(degree: usize, rng: &mut R) -> Self {
        let mut p = Self::zero();
        for i in 0..=degree {
            for j in 0..=degree {
                let re: f64 = rng.random_range(-1.0..1.0);
                let im: f64 = rng.random_range(-1.0..1.0);
                p.add_term(i, j, c(T::lit(re), T::lit(im)));
            }
        }
        p
    }

    pub fn coeff(&self, i: usize, j: usize) -> C<T> {
        self.coeffs.get(&(i, j)).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = ((usize, usize), C<T>)> + '_ {
        self.coeffs.iter().map(|(k, v)| (*k, *v))
    }

    /// Least `N` with `P` in `C_N[X, Y]`.
    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(|(i, j)| *i.max(j)).max().unwrap_or(0)
    }

    /// `f_P(z) = P(z, conj z)`.
    pub fn eval(&self, z: C<T>) -> C<T> {
        let zc = z.conj();
        self.terms()
            .map(|((i, j), v)| v * z.powu(i as u32) * zc.powu(j as u32))
            .fold(C::default(), |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn diag3() -> OperatorModel<f64> {
        let w = 1.0 / 3.0;
        make_diag_unitary(&[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)], &[w, w, w]).unwrap()
    }

    #[test]
    fn diag3_has_uniform_phi() {
        let m = diag3();
        let s = 1.0 / 3f64.sqrt();
        for z in m.phi().iter() {
            assert!((z.re - s).abs() < 1e-15 && z.im == 0.0);
        }
        assert_eq!(m.m(), 2);
        assert_eq!(m.r_a(), Some(1.0));
    }

    #[test]
    fn identity_model() {
        let m = make_diag_unitary(&[c(1.0, 0.0)], &[1.0]).unwrap();
        assert_eq!(m.ambient_dim(), 1);
        let v = m.apply_polynomial(&Polynomial::x()).unwrap();
        assert_eq!(v[0], c(1.0, 0.0));
    }

    #[test]
    fn repeated_phase_is_not_cyclic() {
        let e = make_diag_unitary(&[c(1.0, 0.0), c(1.0, 0.0)], &[0.5, 0.5]).unwrap_err();
        assert!(matches!(e, Error::NonCyclic(_)));
        let e = make_diag_unitary(&[c(1.0, 0.0), c(-1.0, 0.0)], &[1.0, 0.0]).unwrap_err();
        assert!(matches!(e, Error::NonCyclic(_)));
    }

    #[test]
    fn shift_arithmetic() {
        let m = make_bilateral_shift::<f64>(5).unwrap();
        assert_eq!(m.max_exact_n(), Some(2));
        let v = m.monomial(2, 1).unwrap();
        // e_1 sits at index 1 + L
        for (k, z) in v.iter().enumerate() {
            let want = if k == 6 { 1.0 } else { 0.0 };
            assert_eq!(z.re, want);
        }
        assert!(matches!(
            m.monomial(3, 0),
            Err(Error::Truncation { requested: 3, horizon: 2 })
        ));
        assert!(make_bilateral_shift::<f64>(0).is_err());
    }

    #[test]
    fn xy_on_shift_returns_phi() {
        let m = make_bilateral_shift::<f64>(5).unwrap();
        let v = m.apply_polynomial(&Polynomial::xy()).unwrap();
        assert_eq!(&v, m.phi());
    }

    #[test]
    fn x_on_diag3() {
        let m = diag3();
        let v = m.apply_polynomial(&Polynomial::x()).unwrap();
        let s = 1.0 / 3f64.sqrt();
        let want = [c(s, 0.0), c(0.0, s), c(-s, 0.0)];
        for (a, b) in v.iter().zip(want) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn scaling() {
        let d = diag3();
        let m = make_scaled_unitary(c(2.0, 0.0), &d).unwrap();
        assert_eq!(m.r_a(), Some(4.0));
        assert_eq!(m.m(), 3);
        let same = make_scaled_unitary(c(1.0, 0.0), &d).unwrap();
        assert_eq!(same.to_json(), d.to_json());
        let s = make_bilateral_shift::<f64>(5).unwrap();
        let si = make_scaled_unitary(c(0.0, 1.0), &s).unwrap();
        assert!((si.r_a().unwrap() - 1.0).abs() < 1e-15);
        assert!(make_scaled_unitary(c(2.0, 0.0), &m).is_err());
    }

    #[test]
    fn exp_selfadjoint_checks() {
        let m = make_exp_selfadjoint(&[0.1, -0.05, 0.02], 1.0).unwrap();
        assert_eq!(m.generator().unwrap(), &[0.1, -0.05, 0.02]);
        assert!(matches!(
            make_exp_selfadjoint(&[0.2, 0.01], 1.0),
            Err(Error::NormBound { .. })
        ));
        assert!(matches!(
            make_exp_selfadjoint(&[0.1, 0.1], 1.0),
            Err(Error::NonCyclic(_))
        ));
        assert!(matches!(
            make_exp_selfadjoint(&[0.1, 0.0], 1.0),
            Err(Error::KernelVector { index: 1 })
        ));
        // the bound applies after rescaling
        assert!(make_exp_selfadjoint(&[1.0, -0.5, 0.2], 0.1).is_ok());
        assert!(make_exp_selfadjoint(&[1.0, -0.5, 0.2], 0.2).is_err());
    }

    #[test]
    fn direct_sum() {
        let d = diag3();
        let d2 = make_scaled_unitary(c(2.0, 0.0), &d).unwrap();
        let s = make_direct_sum(&d, &d2).unwrap();
        assert_eq!(s.ambient_dim(), 6);
        assert!(s.r_a().is_none());
        assert!((s.phi().norm() - 1.0).abs() < 1e-15);
        assert!(make_direct_sum(&d, &d).is_err());

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let p = Polynomial::random(2, &mut rng);
        let v = s.apply_polynomial(&p).unwrap();
        let a = d.apply_polynomial(&p).unwrap();
        let b = d2.apply_polynomial(&p).unwrap();
        let h = 0.5f64.sqrt();
        for k in 0..3 {
            assert!((v[k] - a[k] * h).norm() < 1e-12);
            assert!((v[k + 3] - b[k] * h).norm() < 1e-12);
        }
    }

    #[test]
    fn polynomial_degree_and_eval() {
        let p = Polynomial::from_terms([((2, 0), c(1.0, 0.0)), ((0, 3), c(0.0, 1.0))]);
        assert_eq!(p.degree(), 3);
        let z = c(0.0, 1.0);
        // z^2 + i conj(z)^3 = -1 + i * i = -2
        assert!((p.eval(z) - c(-2.0, 0.0)).norm() < 1e-15);
        assert_eq!(Polynomial::<f64>::zero().degree(), 0);
    }

    #[test]
    fn json_shape() {
        let j = diag3().to_json();
        assert_eq!(j["kind"], "diag_unitary");
        assert_eq!(j["ambient_dim"], 3);
        assert_eq!(j["M"], 2);
        assert_eq!(j["r_A"], 1.0);
    }

    #[test]
    fn works_in_single_precision() {
        let m = make_bilateral_shift::<f32>(7).unwrap();
        let v = m.monomial(3, 1).unwrap();
        assert_eq!(v[7 + 2].re, 1.0f32);
    }
}
