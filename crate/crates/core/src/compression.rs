//! The spaces `H_N`, the completed operator `A_N` and its eigensystem.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::models::{OperatorModel, Polynomial, Scaling};
use crate::scalar::{arg, c, cr, modulus, Real, C};

/// Relative residual below which a Gram-Schmidt candidate is discarded.
pub const RANK_TOL: f64 = 1e-9;

/// Output of [`orthonormalize`].
#[derive(Clone, Debug)]
pub struct Orthonormalized<T: Real> {
    pub basis: Vec<DVector<C<T>>>,
    /// `pivots[k]` is true when input `k` contributed a basis vector.
    pub pivots: Vec<bool>,
}

impl<T: Real> Orthonormalized<T> {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }
}

/// `q^dagger w` on plain slices; the generic matrix routines are several
/// times slower for complex entries.
#[inline]
fn dotc<T: Real>(q: &[C<T>], w: &[C<T>]) -> C<T> {
    let (mut re, mut im) = (T::zero(), T::zero());
    for (a, b) in q.iter().zip(w) {
        re += a.re * b.re + a.im * b.im;
        im += a.re * b.im - a.im * b.re;
    }
    C::new(re, im)
}

/// Removes the components along `basis` from `w`, twice.
fn project_out<T: Real>(w: &mut DVector<C<T>>, basis: &[DVector<C<T>>]) {
    let w = w.as_mut_slice();
    for _ in 0..2 {
        for q in basis {
            let q = q.as_slice();
            let h = dotc(q, w);
            if h == C::default() {
                continue;
            }
            for (x, y) in w.iter_mut().zip(q) {
                x.re -= h.re * y.re - h.im * y.im;
                x.im -= h.re * y.im + h.im * y.re;
            }
        }
    }
}

/// Tries to extend an orthonormal family by `v`. Returns whether it was kept.
fn extend<T: Real>(basis: &mut Vec<DVector<C<T>>>, v: &DVector<C<T>>, tol: T) -> bool {
    let n0 = v.norm();
    if n0 == T::zero() {
        return false;
    }
    let mut w = v.clone();
    project_out(&mut w, basis);
    let n1 = w.norm();
    if n1 < tol * n0 {
        return false;
    }
    w.unscale_mut(n1);
    basis.push(w);
    true
}

/// Modified Gram-Schmidt with one reorthogonalization pass.
pub fn orthonormalize<T: Real>(vectors: &[DVector<C<T>>], tol: T) -> Orthonormalized<T> {
    orthonormalize_onto(Vec::new(), vectors, tol)
}

/// Continues an existing orthonormal family with more candidates.
pub fn orthonormalize_onto<T: Real>(
    start: Vec<DVector<C<T>>>,
    vectors: &[DVector<C<T>>],
    tol: T,
) -> Orthonormalized<T> {
    let mut basis = start;
    let pivots = vectors.iter().map(|v| extend(&mut basis, v, tol)).collect();
    Orthonormalized { basis, pivots }
}

/// Multiplies `v` by the phase making its first largest-modulus coordinate
/// real and positive.
fn fix_phase<T: Real>(v: &mut DVector<C<T>>) {
    let mut best = T::zero();
    let mut phase = cr(T::one());
    for z in v.iter() {
        let m = modulus(*z);
        if m > best * (T::one() + T::tol(1e-12)) {
            best = m;
            phase = z.conj().unscale(m);
        }
    }
    v.iter_mut().for_each(|z| *z *= phase);
}

/// Monomial exponent lists `(H^-, rest of H_N, H^+)`, row-major, deduplicated.
///
/// With a global `r`, `A^i (A*)^j phi = r^m A^{i-m} (A*)^{j-m} phi` for
/// `m = min(i, j)`, so only the reduced exponents are generated.
fn monomial_lists(n: usize, reduce: bool) -> [Vec<(usize, usize)>; 3] {
    let key = |i: usize, j: usize| {
        if reduce {
            let m = i.min(j);
            (i - m, j - m)
        } else {
            (i, j)
        }
    };
    let mut seen = std::collections::HashSet::new();
    let mut minus = Vec::new();
    for i in 0..n {
        for j in 0..=n {
            if seen.insert(key(i, j)) {
                minus.push(key(i, j));
            }
        }
    }
    let mut rest = Vec::new();
    for j in 0..=n {
        if seen.insert(key(n, j)) {
            rest.push(key(n, j));
        }
    }
    let mut seen = std::collections::HashSet::new();
    let mut plus = Vec::new();
    for i in 1..=n {
        for j in 0..=n {
            if seen.insert(key(i, j)) {
                plus.push(key(i, j));
            }
        }
    }
    [minus, rest, plus]
}

/// `H_N` with the nested basis of `H^-_N`, without an operator completion.
/// Works for every model, including per-block ones.
#[derive(Clone, Debug)]
pub struct HnSpaces<T: Real> {
    pub n: usize,
    /// Orthonormal ambient columns: first `dim_minus` span `H^-_N`, the rest `W^-`.
    pub basis: DMatrix<C<T>>,
    pub dim_minus: usize,
    /// Orthonormal ambient columns spanning `H^+_N`.
    pub plus: DMatrix<C<T>>,
}

impl<T: Real> HnSpaces<T> {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn dim_plus(&self) -> usize {
        self.plus.ncols()
    }

    /// Coordinates of an ambient vector's projection onto `H_N`.
    pub fn coords(&self, v: &DVector<C<T>>) -> DVector<C<T>> {
        linalg::ad_mul_vec(&self.basis, v)
    }
}

fn columns<T: Real>(dim: usize, cols: &[DVector<C<T>>]) -> DMatrix<C<T>> {
    if cols.is_empty() {
        return DMatrix::zeros(dim, 0);
    }
    DMatrix::from_columns(cols)
}

fn generate<T: Real>(model: &OperatorModel<T>, list: &[(usize, usize)]) -> Result<Vec<DVector<C<T>>>> {
    list.iter().map(|(i, j)| model.monomial(*i, *j)).collect()
}

struct RawSpaces<T: Real> {
    minus: Vec<DVector<C<T>>>,
    w_minus: Vec<DVector<C<T>>>,
    plus: Vec<DVector<C<T>>>,
}

fn raw_spaces<T: Real>(model: &OperatorModel<T>, n: usize) -> Result<RawSpaces<T>> {
    let reduce = matches!(model.scaling(), Scaling::Uniform(_));
    let [minus_list, rest_list, plus_list] = monomial_lists(n, reduce);
    let tol = T::tol(RANK_TOL);
    let minus = orthonormalize(&generate(model, &minus_list)?, tol).basis;
    let dim_minus = minus.len();
    let full = orthonormalize_onto(minus, &generate(model, &rest_list)?, tol).basis;
    let mut minus = full;
    let mut w_minus = minus.split_off(dim_minus);
    w_minus.iter_mut().for_each(fix_phase);
    let plus = orthonormalize(&generate(model, &plus_list)?, tol).basis;
    Ok(RawSpaces {
        minus,
        w_minus,
        plus,
    })
}

/// Builds `H_N`, `H^-_N` and `H^+_N` only.
pub fn build_spaces<T: Real>(model: &OperatorModel<T>, n: usize) -> Result<HnSpaces<T>> {
    let raw = raw_spaces(model, n)?;
    let dim = model.ambient_dim();
    let dim_minus = raw.minus.len();
    let mut all = raw.minus;
    all.extend(raw.w_minus);
    Ok(HnSpaces {
        n,
        basis: columns(dim, &all),
        dim_minus,
        plus: columns(dim, &raw.plus),
    })
}

/// `H_N` together with the completed operator.
#[derive(Clone, Debug)]
pub struct CompressionSpaces<T: Real> {
    pub spaces: HnSpaces<T>,
    /// Orthonormal ambient columns spanning `W^+`, matched column-by-column
    /// with the `W^-` columns of `spaces.basis` by the completion `U`.
    pub w_plus: DMatrix<C<T>>,
    pub a_n: DMatrix<C<T>>,
    pub a_star_n: DMatrix<C<T>>,
    /// `phi` in `H_N` coordinates.
    pub phi: DVector<C<T>>,
    pub r_a: T,
    pub m: u32,
}

impl<T: Real> CompressionSpaces<T> {
    pub fn n(&self) -> usize {
        self.spaces.n
    }

    pub fn dim(&self) -> usize {
        self.spaces.dim()
    }

    pub fn basis(&self) -> &DMatrix<C<T>> {
        &self.spaces.basis
    }

    pub fn dim_w(&self) -> usize {
        self.dim() - self.spaces.dim_minus
    }

    /// `max(|A*_N A_N - r I|, |A_N A*_N - r I|)`, max-entry.
    pub fn normality_defect(&self) -> T {
        let id = DMatrix::<C<T>>::identity(self.dim(), self.dim()) * cr(self.r_a);
        let d1 = max_entry(&(linalg::mul(&self.a_star_n, &self.a_n) - &id));
        let d2 = max_entry(&(linalg::mul(&self.a_n, &self.a_star_n) - &id));
        d1.max(d2)
    }

    /// Max-entry distance between `A*_N` and the conjugate transpose of `A_N`.
    pub fn adjoint_defect(&self) -> T {
        max_entry(&(&self.a_star_n - self.a_n.adjoint()))
    }
}

pub(crate) fn max_entry<T: Real>(m: &DMatrix<C<T>>) -> T {
    m.iter().map(|z| modulus(*z)).fold(T::zero(), |a, b| a.max(b))
}

/// Relative size below which a projected seed `P(A w)` counts as absent.
const SEED_TOL: f64 = 1e-6;

/// Builds `H_N` and the completed operator `A_N`.
///
/// `W^+` is seeded with the normalized projections `P_{H_N}(A w)` of the
/// `W^-` basis vectors whenever these survive orthogonalization, and then
/// completed from a spanning set of `H_N`. When `H_N` is invariant under `A`
/// this reproduces `A_N = A`; when `A w` leaves `H_N` entirely, the completion
/// is the `k`-th to `k`-th matching of the computed complements.
pub fn build_compression<T: Real>(model: &OperatorModel<T>, n: usize) -> Result<CompressionSpaces<T>> {
    let r = match model.scaling() {
        Scaling::Uniform(r) => *r,
        Scaling::PerBlock(_) => {
            return Err(Error::UnsupportedModel(
                "the W-completion needs a global r_A; direct sums only support build_spaces".into(),
            ))
        }
    };
    let raw = raw_spaces(model, n)?;
    let dim = model.ambient_dim();
    let d = raw.minus.len() + raw.w_minus.len();
    let dim_w = raw.w_minus.len();
    if raw.plus.len() + dim_w != d {
        return Err(Error::Completion(format!(
            "dim W- = {dim_w} but dim W+ = {}",
            d - raw.plus.len()
        )));
    }

    let mut hn = raw.minus.clone();
    hn.extend(raw.w_minus.iter().cloned());
    let basis = columns(dim, &hn);
    let tol = T::tol(RANK_TOL);
    let seed_tol = T::tol(SEED_TOL);

    // Complete H^+ to H_N, trying the seeds first.
    let mut plus_family = raw.plus.clone();
    let mut w_plus: Vec<Option<DVector<C<T>>>> = vec![None; dim_w];
    for (k, w) in raw.w_minus.iter().enumerate() {
        let aw = model.apply_a(w);
        let scale = aw.norm();
        let seed = linalg::mul_vec(&basis, &linalg::ad_mul_vec(&basis, &aw));
        let mut cand = seed;
        project_out(&mut cand, &plus_family);
        let res = cand.norm();
        if scale > T::zero() && res >= seed_tol * scale {
            cand.unscale_mut(res);
            plus_family.push(cand.clone());
            w_plus[k] = Some(cand);
        }
    }
    let mut fill = Vec::new();
    for v in &hn {
        if plus_family.len() == d {
            break;
        }
        if extend(&mut plus_family, v, tol) {
            let w = plus_family.last_mut().expect("just pushed");
            fix_phase(w);
            fill.push(w.clone());
        }
    }
    let mut fill = fill.into_iter();
    let w_plus: Vec<DVector<C<T>>> = w_plus
        .into_iter()
        .map(|s| s.or_else(|| fill.next()))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Completion("could not complete H+ to H_N".into()))?;

    let sr = cr(r.sqrt());
    let mut image = Vec::with_capacity(d);
    for q in &raw.minus {
        image.push(model.apply_a(q));
    }
    for w in &w_plus {
        image.push(w * sr);
    }
    let a_n = linalg::ad_mul(&basis, &columns(dim, &image));

    let plus_basis = {
        let mut p = raw.plus.clone();
        p.extend(w_plus.iter().cloned());
        columns(dim, &p)
    };
    let mut image = Vec::with_capacity(d);
    for q in &raw.plus {
        image.push(model.apply_a_star(q));
    }
    for w in &raw.w_minus {
        image.push(w * sr);
    }
    let change = linalg::ad_mul(&plus_basis, &basis);
    let a_star_n = linalg::mul(&linalg::ad_mul(&basis, &columns(dim, &image)), &change);

    let phi = linalg::ad_mul_vec(&basis, model.phi());
    let cs = CompressionSpaces {
        spaces: HnSpaces {
            n,
            basis,
            dim_minus: raw.minus.len(),
            plus: columns(dim, &raw.plus),
        },
        w_plus: columns(dim, &w_plus),
        a_n,
        a_star_n,
        phi,
        r_a: r,
        m: model.m(),
    };
    let adj = cs.adjoint_defect();
    if adj > T::tol(1e-10) * (T::one() + r.sqrt()) {
        return Err(Error::Completion(format!(
            "A*_N differs from the adjoint of A_N by {:e}",
            adj.to_f()
        )));
    }
    Ok(cs)
}

/// Eigendata of a compression.
#[derive(Clone, Debug)]
pub struct SpectralData<T: Real> {
    pub n: usize,
    pub lambda: Vec<C<T>>,
    pub xi: Vec<T>,
    /// Eigenvector columns `u_N(n)` in `H_N` coordinates.
    pub u: DMatrix<C<T>>,
    pub r_a: T,
    pub m: u32,
}

/// JSON interchange form.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpectralDataDto {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "D_N")]
    pub d_n: usize,
    pub lambda: Vec<[f64; 2]>,
    pub xi: Vec<f64>,
}

impl<T: Real> SpectralData<T> {
    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    /// `M - max |lambda|`, the room left inside `S`.
    pub fn margin(&self) -> T {
        let top = self.lambda.iter().map(|l| modulus(*l)).fold(T::zero(), |a, b| a.max(b));
        T::from_count(self.m as usize) - top
    }

    pub fn to_dto(&self) -> SpectralDataDto {
        SpectralDataDto {
            n: self.n,
            d_n: self.dim(),
            lambda: self.lambda.iter().map(|l| [l.re.to_f(), l.im.to_f()]).collect(),
            xi: self.xi.iter().map(|x| x.to_f()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_dto()).expect("plain data serializes")
    }
}

impl SpectralDataDto {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues.
fn hermitian_eigen<T: Real>(h: DMatrix<C<T>>) -> (Vec<T>, DMatrix<C<T>>) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), h);
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| eig.eigenvalues[*a].partial_cmp(&eig.eigenvalues[*b]).unwrap());
    let vals = order.iter().map(|k| eig.eigenvalues[*k]).collect();
    let vecs = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// Consecutive runs of a sorted list with gaps at most `tol`.
fn clusters<T: Real>(sorted: &[T], tol: T) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=sorted.len() {
        if k == sorted.len() || sorted[k] - sorted[k - 1] > tol {
            if k > start {
                out.push(start..k);
            }
            start = k;
        }
    }
    out
}

/// Rotates the columns of `u` so the first one carries all of `phi`'s overlap.
fn concentrate_overlap<T: Real>(u: &DMatrix<C<T>>, phi: &DVector<C<T>>) -> DMatrix<C<T>> {
    let m = u.ncols();
    let cvec = u.ad_mul(phi);
    let norm = cvec.norm();
    if m < 2 || norm <= T::tol(1e-14) {
        return u.clone();
    }
    let first = cvec.unscale(norm);
    let mut family = vec![first];
    for k in 0..m {
        let mut e = DVector::from_element(m, C::default());
        e[k] = cr(T::one());
        extend(&mut family, &e, T::tol(1e-6));
        if family.len() == m {
            break;
        }
    }
    u * DMatrix::from_columns(&family)
}

/// Eigendecomposition of a normal matrix through its commuting Hermitian
/// parts, with the phases fixed against `phi`.
///
/// `(lambda, xi, u)`.
pub type Eigensystem<T> = (Vec<C<T>>, Vec<T>, DMatrix<C<T>>);

/// Returns `(lambda, xi, u)` sorted by argument, then modulus.
pub fn normal_eigen<T: Real>(
    a: &DMatrix<C<T>>,
    a_star: &DMatrix<C<T>>,
    phi: &DVector<C<T>>,
    r: T,
) -> Result<Eigensystem<T>> {
    let d = a.nrows();
    let half = cr(T::lit(0.5));
    let h1 = (a + a_star) * half;
    let h2 = (a - a_star) * c(T::zero(), -T::lit(0.5));
    let (vals, vecs) = hermitian_eigen(h1);
    let tol = T::tol(1e-8) * r.sqrt();

    let mut cols: Vec<DVector<C<T>>> = Vec::with_capacity(d);
    for range in clusters(&vals, tol) {
        let block = vecs.columns(range.start, range.len()).into_owned();
        if range.len() == 1 {
            cols.push(block.column(0).into_owned());
            continue;
        }
        let inner = linalg::ad_mul(&block, &linalg::mul(&h2, &block));
        let inner = (&inner + inner.adjoint()) * half;
        let (v2, y) = hermitian_eigen(inner);
        let rotated = linalg::mul(&block, &y);
        for sub in clusters(&v2, tol) {
            let group = rotated.columns(sub.start, sub.len()).into_owned();
            let group = concentrate_overlap(&group, phi);
            cols.extend(group.column_iter().map(|c| c.into_owned()));
        }
    }

    if d == 0 {
        return Ok((Vec::new(), Vec::new(), DMatrix::zeros(0, 0)));
    }
    let au = linalg::mul(a, &DMatrix::from_columns(&cols));
    let mut entries: Vec<(C<T>, T, DVector<C<T>>)> = cols
        .into_iter()
        .zip(au.column_iter())
        .map(|(mut u, au)| {
            let lambda = u.dotc(&au);
            let ov = u.dotc(phi);
            let x = modulus(ov);
            let xi = if x <= T::tol(1e-13) {
                let lead = u
                    .iter()
                    .find(|z| modulus(**z) > T::tol(1e-10))
                    .copied()
                    .unwrap_or(cr(T::one()));
                let p = lead.conj().unscale(modulus(lead));
                u.iter_mut().for_each(|z| *z *= p);
                T::zero()
            } else {
                let p = ov.unscale(x);
                u.iter_mut().for_each(|z| *z *= p);
                x
            };
            (lambda, xi, u)
        })
        .collect();
    entries.sort_by(|x, y| {
        let kx = (arg(x.0), modulus(x.0));
        let ky = (arg(y.0), modulus(y.0));
        kx.partial_cmp(&ky).unwrap().then(y.1.partial_cmp(&x.1).unwrap())
    });
    let lambda = entries.iter().map(|e| e.0).collect();
    let xi = entries.iter().map(|e| e.1).collect();
    let u = DMatrix::from_columns(&entries.into_iter().map(|e| e.2).collect::<Vec<_>>());
    Ok((lambda, xi, u))
}

/// Phase-fixed eigensystem of `A_N`.
pub fn spectral_data<T: Real>(cs: &CompressionSpaces<T>) -> Result<SpectralData<T>> {
    let defect = cs.normality_defect();
    if defect > T::tol(1e-9) * cs.r_a.max(T::one()) {
        return Err(Error::NotNormal { defect: defect.to_f() });
    }
    let (lambda, xi, u) = normal_eigen(&cs.a_n, &cs.a_star_n, &cs.phi, cs.r_a)?;
    Ok(SpectralData {
        n: cs.n(),
        lambda,
        xi,
        u,
        r_a: cs.r_a,
        m: cs.m,
    })
}

/// `build_compression` followed by `spectral_data`.
pub fn compress<T: Real>(model: &OperatorModel<T>, n: usize) -> Result<(CompressionSpaces<T>, SpectralData<T>)> {
    let cs = build_compression(model, n)?;
    let sd = spectral_data(&cs)?;
    Ok((cs, sd))
}

/// `max_n |A_N u(n) - lambda(n) u(n)|_2`.
pub fn eigen_residual<T: Real>(sd: &SpectralData<T>, cs: &CompressionSpaces<T>) -> T {
    column_residual(&cs.a_n, sd, false)
}

/// `max_n |A*_N u(n) - conj(lambda(n)) u(n)|_2`.
pub fn conjugate_eigen_check<T: Real>(sd: &SpectralData<T>, cs: &CompressionSpaces<T>) -> T {
    column_residual(&cs.a_star_n, sd, true)
}

fn column_residual<T: Real>(m: &DMatrix<C<T>>, sd: &SpectralData<T>, conj: bool) -> T {
    let mu = linalg::mul(m, &sd.u);
    let mut worst = T::zero();
    for (k, l) in sd.lambda.iter().enumerate() {
        let l = if conj { l.conj() } else { *l };
        let r = (mu.column(k) - sd.u.column(k) * l).norm();
        worst = worst.max(r);
    }
    worst
}

/// Max-entry distance between `U diag(lambda) U^dagger` and `A_N`.
pub fn reconstruction_defect<T: Real>(sd: &SpectralData<T>, cs: &CompressionSpaces<T>) -> T {
    let diag = DMatrix::from_diagonal(&DVector::from_vec(sd.lambda.clone()));
    max_entry(&(linalg::mul(&linalg::mul(&sd.u, &diag), &sd.u.adjoint()) - &cs.a_n))
}

/// The matrix `P(A_N, A*_N)`.
pub fn operator_polynomial<T: Real>(cs: &CompressionSpaces<T>, p: &Polynomial<T>) -> DMatrix<C<T>> {
    let d = cs.dim();
    let mut acc = DMatrix::<C<T>>::zeros(d, d);
    let max_i = p.terms().map(|((i, _), _)| i).max().unwrap_or(0);
    let max_j = p.terms().map(|((_, j), _)| j).max().unwrap_or(0);
    let mut a_pows = vec![DMatrix::<C<T>>::identity(d, d)];
    for i in 1..=max_i {
        a_pows.push(linalg::mul(&cs.a_n, &a_pows[i - 1]));
    }
    let mut star = DMatrix::<C<T>>::identity(d, d);
    for j in 0..=max_j {
        for (i, ap) in a_pows.iter().enumerate() {
            let coef = p.coeff(i, j);
            if coef != C::default() {
                acc += linalg::mul(ap, &star) * coef;
            }
        }
        if j < max_j {
            star = linalg::mul(&cs.a_star_n, &star);
        }
    }
    acc
}
