//! Generalized distributions: bounded antilinear functionals on `C(S)`,
//! their coefficient vectors `u_N(theta)` and the pairing with embedded
//! functions.
//!
//! Pairings are conjugate-linear in the first slot and distributions are
//! antilinear, so a Dirac delta evaluates as `delta_alpha(f) = conj f(alpha)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::DVector;

use crate::compression::SpectralData;
use crate::embedding::{embed_function, norm0, norm_inf, HnVector, Region};
use crate::error::{Error, Result};
use crate::measure::{counting_measure, BoxGrid, GridFamily, Rect, ReferenceMeasure, SpectrumEstimate};
use crate::scalar::{cr, fmt17, modulus, Real, C};

/// A bounded antilinear functional, seen through what the construction needs.
pub trait GeneralizedDistribution<T: Real>: Send + Sync {
    /// `theta(f)`.
    fn eval(&self, f: &dyn Fn(C<T>) -> C<T>) -> C<T>;
    /// `theta(B, 1)` for an open box.
    fn box_coeff(&self, b: &Rect<T>) -> C<T>;
    /// Upper bound of `|theta(f)|` over functions supported in the closed
    /// region with `|f| <= 1`.
    fn region_bound(&self, region: &Region<T>) -> T;
    /// `K` with `|theta(f)| <= K sup |f|`.
    fn bound_k(&self) -> T;
}

/// `delta_alpha(f) = conj f(alpha)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dirac<T: Real> {
    pub alpha: C<T>,
}

pub fn dirac<T: Real>(alpha: C<T>) -> Dirac<T> {
    Dirac { alpha }
}

impl<T: Real> GeneralizedDistribution<T> for Dirac<T> {
    fn eval(&self, f: &dyn Fn(C<T>) -> C<T>) -> C<T> {
        f(self.alpha).conj()
    }

    fn box_coeff(&self, b: &Rect<T>) -> C<T> {
        if b.contains_open(self.alpha) {
            cr(T::one())
        } else {
            C::default()
        }
    }

    fn region_bound(&self, region: &Region<T>) -> T {
        if region.contains(self.alpha) {
            T::one()
        } else {
            T::zero()
        }
    }

    fn bound_k(&self) -> T {
        T::one()
    }
}

/// `theta_g(f) = int conj(f) g dmu` against a reference measure.
#[derive(Clone)]
pub struct FromFunction<T: Real> {
    pub g: Arc<dyn Fn(C<T>) -> C<T> + Send + Sync>,
    pub reference: ReferenceMeasure<T>,
}

pub fn from_function<T: Real>(
    g: impl Fn(C<T>) -> C<T> + Send + Sync + 'static,
    reference: ReferenceMeasure<T>,
) -> FromFunction<T> {
    FromFunction {
        g: Arc::new(g),
        reference,
    }
}

impl<T: Real> GeneralizedDistribution<T> for FromFunction<T> {
    fn eval(&self, f: &dyn Fn(C<T>) -> C<T>) -> C<T> {
        let g = &self.g;
        self.reference.integrate(&|z| f(z).conj() * g(z))
    }

    fn box_coeff(&self, b: &Rect<T>) -> C<T> {
        let g = &self.g;
        self.reference.integrate_in(&|z| g(z), b)
    }

    fn region_bound(&self, region: &Region<T>) -> T {
        let g = &self.g;
        let abs = |z: C<T>| cr(modulus(g(z)));
        match region {
            Region::Whole => self.bound_k(),
            // overlapping rectangles are counted more than once, which keeps
            // the bound safe
            Region::Rects(rs) => rs
                .iter()
                .map(|r| self.reference.integrate_in(&abs, &r.fattened(T::tol(1e-12))).re)
                .fold(T::zero(), |a, b| a + b),
        }
    }

    fn bound_k(&self) -> T {
        let g = &self.g;
        self.reference.integrate(&|z| cr(modulus(g(z)))).re
    }
}

/// `sum c_i theta_i`.
#[derive(Clone, Default)]
pub struct Combination<T: Real> {
    pub terms: Vec<(C<T>, Arc<dyn GeneralizedDistribution<T>>)>,
}

impl<T: Real> Combination<T> {
    pub fn new() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn with(mut self, c: C<T>, theta: Arc<dyn GeneralizedDistribution<T>>) -> Self {
        self.terms.push((c, theta));
        self
    }
}

impl<T: Real> GeneralizedDistribution<T> for Combination<T> {
    fn eval(&self, f: &dyn Fn(C<T>) -> C<T>) -> C<T> {
        self.terms
            .iter()
            .fold(C::default(), |a, (c, t)| a + *c * t.eval(f))
    }

    fn box_coeff(&self, b: &Rect<T>) -> C<T> {
        self.terms
            .iter()
            .fold(C::default(), |a, (c, t)| a + *c * t.box_coeff(b))
    }

    fn region_bound(&self, region: &Region<T>) -> T {
        self.terms
            .iter()
            .fold(T::zero(), |a, (c, t)| a + modulus(*c) * t.region_bound(region))
    }

    fn bound_k(&self) -> T {
        self.terms
            .iter()
            .fold(T::zero(), |a, (c, t)| a + modulus(*c) * t.bound_k())
    }
}

/// The zero functional.
#[derive(Clone, Copy, Debug, Default)]
pub struct Zero;

impl<T: Real> GeneralizedDistribution<T> for Zero {
    fn eval(&self, _: &dyn Fn(C<T>) -> C<T>) -> C<T> {
        C::default()
    }
    fn box_coeff(&self, _: &Rect<T>) -> C<T> {
        C::default()
    }
    fn region_bound(&self, _: &Region<T>) -> T {
        T::zero()
    }
    fn bound_k(&self) -> T {
        T::zero()
    }
}

/// Open-box masses of `mu_N`, keyed by box, with the eigenvalue indices.
fn occupied_boxes<T: Real>(sd: &SpectralData<T>, grid: &BoxGrid<T>) -> BTreeMap<(usize, usize), (T, Vec<usize>)> {
    let mut out: BTreeMap<(usize, usize), (T, Vec<usize>)> = BTreeMap::new();
    for (k, l) in sd.lambda.iter().enumerate() {
        if let Some(b) = grid.locate(*l) {
            let e = out.entry(b).or_insert((T::zero(), Vec::new()));
            e.0 += sd.xi[k] * sd.xi[k];
            e.1.push(k);
        }
    }
    out
}

/// One row of a [`GoodPairSchedule`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleEntry<T: Real> {
    pub big_n: usize,
    /// Grid level `n(N)`; `0` with `valid = false` is the degenerate branch.
    pub level: usize,
    pub eps: T,
    pub delta_prime: T,
    pub delta: T,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoodPairSchedule<T: Real> {
    pub entries: Vec<ScheduleEntry<T>>,
}

impl<T: Real> GoodPairSchedule<T> {
    /// CSV with header `N,n,eps,delta,valid`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,n,eps,delta,valid\n");
        for e in &self.entries {
            writeln!(s, "{},{},{},{},{}", e.big_n, e.level, fmt17(e.eps), fmt17(e.delta), e.valid).unwrap();
        }
        s
    }

    pub fn is_monotone(&self) -> bool {
        self.entries.windows(2).all(|w| w[0].level <= w[1].level)
    }
}

const EPS_HALVINGS: usize = 60;

/// Checks the three clauses at one level; returns the entry when they hold.
fn try_level<T: Real>(
    theta: &dyn GeneralizedDistribution<T>,
    sd: &SpectralData<T>,
    grid: &BoxGrid<T>,
    reference: &ReferenceMeasure<T>,
) -> Option<ScheduleEntry<T>> {
    let level = grid.level;
    let occupied = occupied_boxes(sd, grid);
    let ref_mass = reference.box_mass_matrix(grid);
    let k = grid.boxes_per_side();
    let mut delta_prime: Option<T> = None;
    let mut deviation = T::zero();
    for i in 0..k {
        for j in 0..k {
            let mu_n = occupied.get(&(i, j)).map_or(T::zero(), |e| e.0);
            let mu = ref_mass[(i, j)];
            if mu > T::zero() {
                delta_prime = Some(delta_prime.map_or(mu_n, |d| d.min(mu_n)));
            }
            deviation = deviation.max((mu_n - mu).mag());
        }
    }
    let delta_prime = delta_prime.unwrap_or(T::zero());
    let delta = delta_prime / T::lit(2f64.powi(3 * (level as i32 + 2)));
    if theta.bound_k() == T::zero() {
        return Some(ScheduleEntry {
            big_n: sd.n,
            level,
            eps: grid.min_gap() / T::lit(3.0),
            delta_prime,
            delta,
            valid: true,
        });
    }
    if deviation >= delta {
        return None;
    }
    let am = counting_measure(sd);
    let mut eps = grid.min_gap() / T::lit(3.0);
    for _ in 0..EPS_HALVINGS {
        let strips = Region::strips(grid, eps);
        let a = theta.region_bound(&strips) < delta;
        let b = am.mass_where(|z| grid.distance_to_cuts(z) < eps) < delta;
        if a && b {
            return Some(ScheduleEntry {
                big_n: sd.n,
                level,
                eps,
                delta_prime,
                delta,
                valid: true,
            });
        }
        eps /= T::lit(2.0);
    }
    None
}

/// Per `N`, the largest level `1 <= n <= n_max` for which some `eps`
/// satisfies the three clauses of a `theta`-good pair.
pub fn good_pair_schedule<T: Real>(
    theta: &dyn GeneralizedDistribution<T>,
    sd_sequence: &[SpectralData<T>],
    grids: &GridFamily<T>,
    reference: &ReferenceMeasure<T>,
    n_max: usize,
) -> GoodPairSchedule<T> {
    let top = n_max.min(grids.max_level());
    let entries = sd_sequence
        .iter()
        .map(|sd| {
            (1..=top)
                .rev()
                .find_map(|n| try_level(theta, sd, grids.level(n), reference))
                .unwrap_or(ScheduleEntry {
                    big_n: sd.n,
                    level: 0,
                    eps: T::one(),
                    delta_prime: T::zero(),
                    delta: T::zero(),
                    valid: false,
                })
        })
        .collect();
    GoodPairSchedule { entries }
}

/// `u_N(theta)`: `a_k = xi_k theta(B, 1) / mu_N(B)` for `lambda_N(k)` in a box
/// `B` of positive reference mass.
///
/// A box of positive reference mass with `theta(B, 1) != 0` but no
/// eigenvalue makes the vector undefined at this `N`.
pub fn theta_vector<T: Real>(
    theta: &dyn GeneralizedDistribution<T>,
    sd: &SpectralData<T>,
    grid: &BoxGrid<T>,
    reference: &ReferenceMeasure<T>,
) -> Result<HnVector<T>> {
    let occupied = occupied_boxes(sd, grid);
    let ref_mass = reference.box_mass_matrix(grid);
    let k = grid.boxes_per_side();
    let mut coeffs = DVector::from_element(sd.dim(), C::default());
    for i in 0..k {
        for j in 0..k {
            if ref_mass[(i, j)] <= T::zero() {
                continue;
            }
            let t = theta.box_coeff(&grid.rect(i, j));
            if t == C::default() {
                continue;
            }
            match occupied.get(&(i, j)) {
                Some((mu_n, idx)) if *mu_n > T::zero() => {
                    for &n in idx {
                        coeffs[n] = t * (sd.xi[n] / *mu_n);
                    }
                }
                _ => return Err(Error::InsufficientN { box_index: (i, j) }),
            }
        }
    }
    Ok(HnVector::new(coeffs))
}

/// `sum conj(x_n) y_n`.
pub fn pairing<T: Real>(x: &HnVector<T>, y: &HnVector<T>) -> C<T> {
    x.coeffs.dotc(&y.coeffs)
}

/// Split of a pairing into the part near the spectrum estimate and the rest,
/// each with its Hoelder bound.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingReport<T: Real> {
    pub value: C<T>,
    /// `|x|_inf` over the `eps`-fattened estimate times `|y|_0`.
    pub near_bound: T,
    /// Largest `|x_n| / xi_n` off that region times the far part of `|y|_0`.
    pub far_bound: T,
}

pub fn pairing_report<T: Real>(
    x: &HnVector<T>,
    y: &HnVector<T>,
    sd: &SpectralData<T>,
    spectrum: &SpectrumEstimate<T>,
    eps: T,
) -> PairingReport<T> {
    let near = Region::fattened(&spectrum.rects(), eps);
    let mut far_x = T::zero();
    let mut far_y = T::zero();
    for (k, l) in sd.lambda.iter().enumerate() {
        if near.contains(*l) {
            continue;
        }
        let xi = sd.xi[k];
        let a = modulus(x.coeffs[k]);
        if xi > T::zero() {
            far_x = far_x.max(a / xi);
        } else if a > T::zero() {
            far_x = T::max_value().unwrap() * T::lit(2.0);
        }
        far_y += xi * modulus(y.coeffs[k]);
    }
    PairingReport {
        value: pairing(x, y),
        near_bound: norm_inf(x, sd, &near) * norm0(y, sd),
        far_bound: if far_y == T::zero() { T::zero() } else { far_x * far_y },
    }
}

/// Regularity data of a test function, used for error budgets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FunctionHint<T: Real> {
    /// Lipschitz constant near the spectrum.
    pub lipschitz: T,
    /// Bound of `|f|` on `S`.
    pub sup: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepresentationDefect<T: Real> {
    pub pairing: C<T>,
    pub expected: C<T>,
    pub defect: T,
    pub budget: T,
}

/// `|<F_N(f) | u_N(theta)> - theta(f)|` with the budget
/// `L diam (sum |theta(B,1)| + K) + 2 sup|f| theta-bound(R_eps)`.
pub fn representation_defect<T: Real>(
    theta: &dyn GeneralizedDistribution<T>,
    f: &dyn Fn(C<T>) -> C<T>,
    hint: FunctionHint<T>,
    sd: &SpectralData<T>,
    grid: &BoxGrid<T>,
    reference: &ReferenceMeasure<T>,
    eps: T,
) -> Result<RepresentationDefect<T>> {
    let u = theta_vector(theta, sd, grid, reference)?;
    let value = pairing(&embed_function(f, sd), &u);
    let expected = theta.eval(f);
    let (coeff_sum, _) = norm0_bound_check(theta, grid, reference);
    let budget = hint.lipschitz * grid.max_diam() * (coeff_sum + theta.bound_k())
        + T::lit(2.0) * hint.sup * theta.region_bound(&Region::strips(grid, eps));
    Ok(RepresentationDefect {
        pairing: value,
        expected,
        defect: modulus(value - expected),
        budget,
    })
}

/// `(sum_{mu(B) > 0} |theta(B, 1)|, 16 K)`.
pub fn norm0_bound_check<T: Real>(
    theta: &dyn GeneralizedDistribution<T>,
    grid: &BoxGrid<T>,
    reference: &ReferenceMeasure<T>,
) -> (T, T) {
    let ref_mass = reference.box_mass_matrix(grid);
    let k = grid.boxes_per_side();
    let mut sum = T::zero();
    for i in 0..k {
        for j in 0..k {
            if ref_mass[(i, j)] > T::zero() {
                sum += modulus(theta.box_coeff(&grid.rect(i, j)));
            }
        }
    }
    (sum, T::lit(16.0) * theta.bound_k())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compression::compress;
    use crate::measure::build_grid;
    use crate::models::*;
    use crate::scalar::c;

    fn diag3() -> OperatorModel<f64> {
        let w = 1.0 / 3.0;
        make_diag_unitary(&[cr(1.0), c(0.0, 1.0), cr(-1.0)], &[w, w, w]).unwrap()
    }

    #[test]
    fn dirac_conventions() {
        let d = dirac(c(0.0, 1.0));
        assert_eq!(d.eval(&|z| z), c(0.0, -1.0));
        assert_eq!(d.eval(&|z| cr(z.im * 2.0)), cr(2.0));
        let far = Rect::new(1.0, 2.0, 1.0, 2.0);
        assert_eq!(d.box_coeff(&far), C::default());
    }

    #[test]
    fn dirac_vector_on_diag3() {
        let m = diag3();
        let (_, sd) = compress(&m, 1).unwrap();
        let r = m.reference_measure().unwrap();
        let g = build_grid(2.0, 2, &[-1.0, 0.0, 1.0]).unwrap();
        let u = theta_vector(&dirac(c(0.0, 1.0)), &sd, &g, r).unwrap();
        for (k, l) in sd.lambda.iter().enumerate() {
            let want = if (l - c(0.0, 1.0)).norm() < 1e-9 { 3f64.sqrt() } else { 0.0 };
            assert!((u.coeffs[k] - cr(want)).norm() < 1e-10);
        }
        assert!((norm0(&u, &sd) - 1.0).abs() < 1e-12);
        let z = theta_vector(&Zero, &sd, &g, r).unwrap();
        assert_eq!(norm0(&z, &sd), 0.0);
        assert_eq!(norm0_bound_check(&dirac(c(0.0, 1.0)), &g, r), (1.0, 16.0));
    }

    #[test]
    fn representation_exact_on_diag3() {
        let m = diag3();
        let (_, sd) = compress(&m, 1).unwrap();
        let r = m.reference_measure().unwrap();
        let g = build_grid(2.0, 2, &[-1.0, 0.0, 1.0]).unwrap();
        let hint = FunctionHint { lipschitz: 4.0, sup: 4.0 };
        let d = dirac(c(0.0, 1.0));
        let res = representation_defect(&d, &|z| z * z, hint, &sd, &g, r, 1e-3).unwrap();
        assert!(res.defect < 1e-10);
        assert!((res.expected - cr(-1.0)).norm() < 1e-15);
    }

    #[test]
    fn function_distribution_on_diag3() {
        let m = diag3();
        let (_, sd) = compress(&m, 1).unwrap();
        let r = m.reference_measure().unwrap().clone();
        let theta = from_function(|_| cr(1.0), r.clone());
        let mean = theta.eval(&|z| z * c(0.0, 1.0));
        // (1/3) sum conj(i z) over {1, i, -1}
        assert!((mean - cr(-1.0 / 3.0)).norm() < 1e-12);
        let g = build_grid(2.0, 2, &[-1.0, 0.0, 1.0]).unwrap();
        let total: C<f64> = (0..16)
            .flat_map(|i| (0..16).map(move |j| (i, j)))
            .map(|(i, j)| theta.box_coeff(&g.rect(i, j)))
            .sum();
        assert!((total - cr(1.0)).norm() < 1e-12);
        // [F(g)]_0 consistency at an isolating grid
        let gfun = |z: C<f64>| z;
        let th = from_function(gfun, r.clone());
        let u = theta_vector(&th, &sd, &g, &r).unwrap();
        let f = embed_function(&gfun, &sd);
        assert!(norm0(&(&u - &f), &sd) < 1e-10);
    }

    #[test]
    fn schedule_on_diag3() {
        let m = diag3();
        let (_, sd) = compress(&m, 1).unwrap();
        let r = m.reference_measure().unwrap();
        let fam = GridFamily::build(2.0, 3, &[-1.0, 0.0, 1.0]).unwrap();
        let s = good_pair_schedule(&dirac(cr(1.0)), std::slice::from_ref(&sd), &fam, r, 2);
        assert!(s.entries[0].valid);
        assert_eq!(s.entries[0].level, 2);
        let s0 = good_pair_schedule(&dirac(cr(1.0)), std::slice::from_ref(&sd), &fam, r, 0);
        assert!(!s0.entries[0].valid && s0.entries[0].level == 0);
        let sz = good_pair_schedule(&Zero, &[sd], &fam, r, 3);
        assert!(sz.entries[0].valid);
        assert!(s.to_csv().starts_with("N,n,eps,delta,valid\n1,2,"));
    }

    #[test]
    fn pairing_symmetry() {
        let (_, sd) = compress(&diag3(), 1).unwrap();
        let x = embed_function(&|z| z * z + cr(1.0), &sd);
        let y = embed_function(&|z| z.conj() * c(0.0, 2.0), &sd);
        assert!((pairing(&x, &y) - pairing(&y, &x).conj()).norm() < 1e-12);
        assert!((pairing(&x, &x).re - x.coeffs.norm_squared()).abs() < 1e-12);
    }
}
