//! Kernel operators in the eigenbasis, the checks that tie them to a
//! continuous kernel, and kernel recovery from box vectors and Dirac deltas.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::compression::SpectralData;
use crate::distributions::{pairing, theta_vector, GeneralizedDistribution};
use crate::embedding::{embed_function, norm0, norm_inf, HnVector, Region};
use crate::error::{Error, Result};
use crate::linalg;
use crate::measure::{BoxGrid, GridFamily, ReferenceMeasure};
use crate::models::Polynomial;
use crate::scalar::{c, cr, fmt17, modulus, Real, C};

type KernelFn<T> = dyn Fn(C<T>, C<T>) -> C<T> + Send + Sync;

/// A continuous kernel `K(x, y)` with a sup bound and a Lipschitz constant,
/// both valid on the disc of the radius it was built for.
#[derive(Clone)]
pub struct KernelFunction<T: Real> {
    pub name: String,
    pub eval: Arc<KernelFn<T>>,
    /// `K_D`.
    pub sup_bound: T,
    /// `|K(x,y) - K(x',y')| <= L (|x - x'| + |y - y'|)`.
    pub lipschitz: T,
}

impl<T: Real> std::fmt::Debug for KernelFunction<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelFunction")
            .field("name", &self.name)
            .field("sup_bound", &self.sup_bound.to_f())
            .field("lipschitz", &self.lipschitz.to_f())
            .finish()
    }
}

impl<T: Real> KernelFunction<T> {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(C<T>, C<T>) -> C<T> + Send + Sync + 'static,
        sup_bound: T,
        lipschitz: T,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            sup_bound,
            lipschitz,
        }
    }

    pub fn at(&self, x: C<T>, y: C<T>) -> C<T> {
        (self.eval)(x, y)
    }

    /// `K(x, y) = x conj(y)` on `|x|, |y| <= radius`.
    pub fn xy_conj(radius: T) -> Self {
        Self::new("xy_conj", |x: C<T>, y: C<T>| x * y.conj(), radius * radius, radius)
    }

    /// `K(x, y) = exp(Re(x conj(y)))` on `|x|, |y| <= radius`.
    pub fn exp_re(radius: T) -> Self {
        let top = (radius * radius).exp();
        Self::new(
            "exp_re",
            |x: C<T>, y: C<T>| cr((x * y.conj()).re.exp()),
            top,
            radius * top,
        )
    }

    pub fn constant(value: C<T>) -> Self {
        Self::new("constant", move |_, _| value, modulus(value), T::zero())
    }

    pub fn zero() -> Self {
        Self::new("zero", |_, _| C::default(), T::zero(), T::zero())
    }

    /// Builtins by name; `constant` takes `value`.
    pub fn by_name(name: &str, radius: T, value: C<T>) -> Result<Self> {
        match name {
            "xy_conj" => Ok(Self::xy_conj(radius)),
            "exp_re" => Ok(Self::exp_re(radius)),
            "constant" => Ok(Self::constant(value)),
            "zero" => Ok(Self::zero()),
            other => Err(Error::InvalidParameter(format!("unknown kernel {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Kernel(String),
    User,
}

/// A `D_N x D_N` matrix acting on eigencoordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ApproxOperator<T: Real> {
    pub matrix: DMatrix<C<T>>,
    pub provenance: Provenance,
}

impl<T: Real> ApproxOperator<T> {
    pub fn user(matrix: DMatrix<C<T>>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        if matrix.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidParameter("operator has non-finite entries".into()));
        }
        Ok(Self {
            matrix,
            provenance: Provenance::User,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(dim, dim),
            provenance: Provenance::User,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, v: &HnVector<T>) -> Result<HnVector<T>> {
        if v.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(HnVector::new(linalg::mul_vec(&self.matrix, &v.coeffs)))
    }
}

/// `B_N` with entry `(n, k) = xi_k xi_n K(lambda_k, lambda_n)`.
pub fn kernel_operator<T: Real>(k: &KernelFunction<T>, sd: &SpectralData<T>) -> ApproxOperator<T> {
    let d = sd.dim();
    let matrix = DMatrix::from_fn(d, d, |n, j| k.at(sd.lambda[j], sd.lambda[n]) * (sd.xi[j] * sd.xi[n]));
    ApproxOperator {
        matrix,
        provenance: Provenance::Kernel(k.name.clone()),
    }
}

/// Box of level `p` containing `alpha`, with its `mu_N` mass and members.
fn box_of<T: Real>(
    alpha: C<T>,
    grid: &BoxGrid<T>,
    sd: &SpectralData<T>,
) -> Result<((usize, usize), T, Vec<usize>)> {
    let b = grid.locate(alpha).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "point ({}, {}) lies on a cut of level {}",
            alpha.re.to_f(),
            alpha.im.to_f(),
            grid.level
        ))
    })?;
    let members: Vec<usize> = (0..sd.dim()).filter(|k| grid.locate(sd.lambda[*k]) == Some(b)).collect();
    let mass = members.iter().fold(T::zero(), |a, k| a + sd.xi[*k] * sd.xi[*k]);
    if mass <= T::zero() {
        return Err(Error::InsufficientN { box_index: b });
    }
    Ok((b, mass, members))
}

/// `u^p_alpha(N)`: `xi_k / mu_N(B)` on the level-`p` box `B` around `alpha`.
pub fn box_vector<T: Real>(
    alpha: C<T>,
    p: usize,
    sd: &SpectralData<T>,
    family: &GridFamily<T>,
) -> Result<HnVector<T>> {
    let (_, mass, members) = box_of(alpha, family.level(p), sd)?;
    let mut v = HnVector::zeros(sd.dim());
    for k in members {
        v.coeffs[k] = cr(sd.xi[k] / mass);
    }
    Ok(v)
}

/// `<u^p_beta | B u^p_alpha>`.
pub fn propagator<T: Real>(
    b: &ApproxOperator<T>,
    alpha: C<T>,
    beta: C<T>,
    p: usize,
    sd: &SpectralData<T>,
    family: &GridFamily<T>,
) -> Result<C<T>> {
    let ua = box_vector(alpha, p, sd, family)?;
    let ub = box_vector(beta, p, sd, family)?;
    Ok(pairing(&ub, &b.apply(&ua)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateRow<T: Real> {
    pub p: usize,
    pub big_n: usize,
    pub value: C<T>,
    /// `L (diam B^p_alpha + diam B^p_beta)`.
    pub budget: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelEstimate<T: Real> {
    pub alpha: C<T>,
    pub beta: C<T>,
    pub rows: Vec<EstimateRow<T>>,
    /// Value of the row with the largest `p`, then the largest `N`.
    pub value: C<T>,
    pub budget: T,
}

impl<T: Real> KernelEstimate<T> {
    /// CSV body rows; see [`propagator_csv_header`].
    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                fmt17(self.alpha.re),
                fmt17(self.alpha.im),
                fmt17(self.beta.re),
                fmt17(self.beta.im),
                r.p,
                r.big_n,
                fmt17(r.value.re),
                fmt17(r.value.im),
                fmt17(r.budget)
            )
            .unwrap();
        }
        s
    }
}

pub fn propagator_csv_header() -> &'static str {
    "alpha_re,alpha_im,beta_re,beta_im,p,N,value_re,value_im,budget\n"
}

/// Propagators over every `(p, N)` cell; `ops[i]` acts on `sds[i]`.
///
/// Cells where either box is empty or a point sits on a cut are left out of
/// the table. `lipschitz` is the constant used for the budget.
pub fn kernel_estimate<T: Real>(
    ops: &[ApproxOperator<T>],
    lipschitz: T,
    alpha: C<T>,
    beta: C<T>,
    p_schedule: &[usize],
    sds: &[SpectralData<T>],
    family: &GridFamily<T>,
) -> Result<KernelEstimate<T>> {
    if ops.len() != sds.len() {
        return Err(Error::Dimension {
            expected: sds.len(),
            got: ops.len(),
        });
    }
    let cells: Vec<(usize, usize)> = p_schedule
        .iter()
        .filter(|p| **p <= family.max_level())
        .flat_map(|p| (0..sds.len()).map(move |i| (*p, i)))
        .collect();
    let mut rows: Vec<EstimateRow<T>> = cells
        .par_iter()
        .map(|&(p, i)| {
            let grid = family.level(p);
            propagator(&ops[i], alpha, beta, p, &sds[i], family).ok().map(|value| {
                let da = grid.locate(alpha).map(|(a, b)| grid.rect(a, b).diam());
                let db = grid.locate(beta).map(|(a, b)| grid.rect(a, b).diam());
                EstimateRow {
                    p,
                    big_n: sds[i].n,
                    value,
                    budget: lipschitz * (da.unwrap_or_default() + db.unwrap_or_default()),
                }
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by_key(|r| (r.p, r.big_n));
    let last = rows.last().ok_or_else(|| {
        Error::InvalidParameter("no (p, N) cell has both boxes occupied".into())
    })?;
    Ok(KernelEstimate {
        alpha,
        beta,
        value: last.value,
        budget: last.budget,
        rows,
    })
}

fn random_vector<T: Real>(dim: usize, rng: &mut ChaCha8Rng) -> DVector<C<T>> {
    DVector::from_fn(dim, |_, _| {
        c(
            T::lit(rng.random_range(-1.0..1.0)),
            T::lit(rng.random_range(-1.0..1.0)),
        )
    })
}

const POWER_STEPS: usize = 60;

/// Sampled lower estimate of `|B|_2`: random vectors, then power iteration on
/// `B^dagger B` from the best sample.
pub fn check_c1<T: Real>(b: &ApproxOperator<T>, samples: usize, seed: u64) -> T {
    let d = b.dim();
    if d == 0 {
        return T::zero();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = T::zero();
    let mut start = DVector::from_element(d, cr(T::one()));
    for _ in 0..samples.max(1) {
        let v = random_vector::<T>(d, &mut rng);
        let nv = v.norm();
        if nv == T::zero() {
            continue;
        }
        let ratio = linalg::mul_vec(&b.matrix, &v).norm() / nv;
        if ratio > best {
            best = ratio;
            start = v;
        }
    }
    let mut v = start.unscale(start.norm());
    for _ in 0..POWER_STEPS {
        let bv = linalg::mul_vec(&b.matrix, &v);
        best = best.max(bv.norm());
        let w = linalg::ad_mul_vec(&b.matrix, &bv);
        let nw = w.norm();
        if nw == T::zero() {
            break;
        }
        v = w.unscale(nw);
    }
    best
}

/// Largest `|Bv|_inf / |v|_inf` over `S` for random `v = F_N(z)` with
/// `|z| <= 1` pointwise.
pub fn check_c1_inf<T: Real>(b: &ApproxOperator<T>, sd: &SpectralData<T>, samples: usize, seed: u64) -> T {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = T::zero();
    for _ in 0..samples.max(1) {
        let z = random_vector::<T>(sd.dim(), &mut rng);
        let v = HnVector::new(DVector::from_iterator(
            sd.dim(),
            z.iter().zip(&sd.xi).map(|(a, x)| *a * *x),
        ));
        let nv = norm_inf(&v, sd, &Region::Whole);
        if nv == T::zero() {
            continue;
        }
        let bv = HnVector::new(linalg::mul_vec(&b.matrix, &v.coeffs));
        best = best.max(norm_inf(&bv, sd, &Region::Whole) / nv);
    }
    best
}

/// `F_N(B_D f)` with `B_D f(y) = int K(x, y) f(x) dmu(x)`.
fn embed_kernel_image<T: Real>(
    k: &KernelFunction<T>,
    f: &(dyn Fn(C<T>) -> C<T> + Sync),
    sd: &SpectralData<T>,
    reference: &ReferenceMeasure<T>,
) -> HnVector<T> {
    embed_function(&|y| reference.integrate(&|x| k.at(x, y) * f(x)), sd)
}

/// `max_P |B F_N(f_P) - F_N(B_D f_P)|_2`.
pub fn check_c2<T: Real>(
    b: &ApproxOperator<T>,
    k: &KernelFunction<T>,
    sd: &SpectralData<T>,
    reference: &ReferenceMeasure<T>,
    polys: &[Polynomial<T>],
) -> Result<T> {
    let mut worst = T::zero();
    for p in polys {
        let lhs = b.apply(&embed_function(&|z| p.eval(z), sd))?;
        let rhs = embed_kernel_image(k, &|z| p.eval(z), sd, reference);
        worst = worst.max((&lhs - &rhs).coeffs.norm());
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrimeChecks<T: Real> {
    /// Largest sup-over-`S` distance between `B F_N(chi*_B)` and
    /// `F_N(B_D chi*_B)`, over boxes of positive reference mass.
    pub c2p: T,
    /// Largest `|B u^n_ij|_inf` over occupied boxes of the given levels.
    pub c3p: T,
}

/// The primed conditions, with `chi*_B = chi_B / mu(B)`.
pub fn check_c2prime_c3prime<T: Real>(
    b: &ApproxOperator<T>,
    k: &KernelFunction<T>,
    sd: &SpectralData<T>,
    reference: &ReferenceMeasure<T>,
    family: &GridFamily<T>,
    levels: &[usize],
) -> Result<PrimeChecks<T>> {
    let mut c2p = T::zero();
    let mut c3p = T::zero();
    for &p in levels {
        let grid = family.level(p);
        let ref_mass = reference.box_mass_matrix(grid);
        let side = grid.boxes_per_side();
        let mut members = vec![Vec::new(); side * side];
        for (idx, l) in sd.lambda.iter().enumerate() {
            if let Some((i, j)) = grid.locate(*l) {
                members[i * side + j].push(idx);
            }
        }
        for i in 0..side {
            for j in 0..side {
                let rect = grid.rect(i, j);
                let mem = &members[i * side + j];
                let mu = ref_mass[(i, j)];
                if mu > T::zero() {
                    let mut v = HnVector::zeros(sd.dim());
                    for &n in mem {
                        v.coeffs[n] = cr(sd.xi[n] / mu);
                    }
                    let lhs = b.apply(&v)?;
                    let rhs = embed_function(
                        &|y| reference.integrate_in(&|x| k.at(x, y), &rect) / mu,
                        sd,
                    );
                    c2p = c2p.max(norm_inf(&(&lhs - &rhs), sd, &Region::Whole));
                }
                let mass = mem.iter().fold(T::zero(), |a, n| a + sd.xi[*n] * sd.xi[*n]);
                if mass > T::zero() {
                    let mut u = HnVector::zeros(sd.dim());
                    for &n in mem {
                        u.coeffs[n] = cr(sd.xi[n] / mass);
                    }
                    c3p = c3p.max(norm_inf(&b.apply(&u)?, sd, &Region::Whole));
                }
            }
        }
    }
    Ok(PrimeChecks { c2p, c3p })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiracPropagator<T: Real> {
    pub value: C<T>,
    /// `|u(theta_beta)|_0`.
    pub norm0_beta: T,
    /// `|B u(theta_alpha)|_inf` over `S`.
    pub norm_inf_image: T,
    /// Product of the two; bounds `|value|`.
    pub holder_bound: T,
}

/// `<u(theta_beta) | B u(theta_alpha)>` on one grid.
pub fn dirac_propagator<T: Real>(
    b: &ApproxOperator<T>,
    theta_alpha: &dyn GeneralizedDistribution<T>,
    theta_beta: &dyn GeneralizedDistribution<T>,
    sd: &SpectralData<T>,
    grid: &BoxGrid<T>,
    reference: &ReferenceMeasure<T>,
) -> Result<DiracPropagator<T>> {
    let ua = theta_vector(theta_alpha, sd, grid, reference)?;
    let ub = theta_vector(theta_beta, sd, grid, reference)?;
    let image = b.apply(&ua)?;
    let norm0_beta = norm0(&ub, sd);
    let norm_inf_image = norm_inf(&image, sd, &Region::Whole);
    Ok(DiracPropagator {
        value: pairing(&ub, &image),
        norm0_beta,
        norm_inf_image,
        holder_bound: norm0_beta * norm_inf_image,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compression::compress;
    use crate::distributions::dirac;
    use crate::models::*;

    fn diag3() -> OperatorModel<f64> {
        let w = 1.0 / 3.0;
        make_diag_unitary(&[cr(1.0), c(0.0, 1.0), cr(-1.0)], &[w, w, w]).unwrap()
    }

    fn fam() -> GridFamily<f64> {
        GridFamily::build(2.0, 3, &[-1.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn operator_entries() {
        let (_, sd) = compress(&diag3(), 1).unwrap();
        let b = kernel_operator(&KernelFunction::constant(cr(1.0)), &sd);
        for z in b.matrix.iter() {
            assert!((z - cr(1.0 / 3.0)).norm() < 1e-12);
        }
        let b = kernel_operator(&KernelFunction::xy_conj(1.0), &sd);
        for n in 0..3 {
            for k in 0..3 {
                let want = sd.lambda[k] * sd.lambda[n].conj() / 3.0;
                assert!((b.matrix[(n, k)] - want).norm() < 1e-12);
            }
        }
        assert!(kernel_operator(&KernelFunction::zero(), &sd).matrix.iter().all(|z| *z == C::default()));
    }

    #[test]
    fn diag3_recovers_kernel() {
        let m = diag3();
        let (_, sd) = compress(&m, 1).unwrap();
        let f = fam();
        let b = kernel_operator(&KernelFunction::xy_conj(1.0), &sd);
        let v = propagator(&b, cr(1.0), c(0.0, 1.0), 2, &sd, &f).unwrap();
        assert!((v - c(0.0, -1.0)).norm() < 1e-10);
        let u = box_vector(cr(1.0), 2, &sd, &f).unwrap();
        assert!((u.coeffs.norm() - 3f64.sqrt()).abs() < 1e-10);
        assert!(matches!(
            box_vector(c(0.5, 0.5), 2, &sd, &f),
            Err(Error::InsufficientN { .. })
        ));
        let r = m.reference_measure().unwrap();
        let d = dirac_propagator(&b, &dirac(cr(1.0)), &dirac(c(0.0, 1.0)), &sd, f.level(2), r).unwrap();
        assert!((d.value - v).norm() < 1e-14);
        assert!(modulus(d.value) <= d.holder_bound + 1e-12);
    }

    #[test]
    fn conditions_on_diag3() {
        let m = diag3();
        let (_, sd) = compress(&m, 1).unwrap();
        let r = m.reference_measure().unwrap();
        let k = KernelFunction::xy_conj(1.0);
        let b = kernel_operator(&k, &sd);
        assert!(check_c1(&b, 8, 1) <= k.sup_bound + 1e-9);
        assert!(check_c1_inf(&b, &sd, 8, 1) <= k.sup_bound + 1e-9);
        let polys = [Polynomial::one(), Polynomial::x(), Polynomial::xy()];
        assert!(check_c2(&b, &k, &sd, r, &polys).unwrap() < 1e-12);
        let pc = check_c2prime_c3prime(&b, &k, &sd, r, &fam(), &[1, 2, 3]).unwrap();
        assert!(pc.c2p < 1e-10);
        assert!(pc.c3p <= 3.0 * k.sup_bound);
        let z = ApproxOperator::zero(3);
        assert_eq!(check_c1(&z, 4, 0), 0.0);
        let pz = check_c2prime_c3prime(&z, &KernelFunction::zero(), &sd, r, &fam(), &[2]).unwrap();
        assert_eq!((pz.c2p, pz.c3p), (0.0, 0.0));
        // identity violates C2 for K = 0
        let id = ApproxOperator::user(DMatrix::identity(3, 3)).unwrap();
        assert!(check_c2(&id, &KernelFunction::zero(), &sd, r, &polys).unwrap() > 0.5);
    }

    #[test]
    fn estimate_table() {
        let (_, sd) = compress(&diag3(), 1).unwrap();
        let k = KernelFunction::xy_conj(1.0);
        let b = kernel_operator(&k, &sd);
        let est = kernel_estimate(&[b], k.lipschitz, cr(1.0), c(0.0, 1.0), &[1, 2, 3, 9], &[sd], &fam()).unwrap();
        assert_eq!(est.rows.len(), 3);
        assert_eq!(est.rows.last().unwrap().p, 3);
        assert!((est.value - c(0.0, -1.0)).norm() < 1e-10);
        assert!(est.csv_rows().lines().count() == 3);
    }

    #[test]
    fn unknown_kernel() {
        assert!(KernelFunction::<f64>::by_name("gauss", 1.0, C::default()).is_err());
        let e = KernelFunction::<f64>::exp_re(1.0);
        assert!((e.at(cr(1.0), cr(1.0)) - cr(std::f64::consts::E)).norm() < 1e-14);
    }
}
